//! Densities on R^d and Poisson point-process sampling.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

/// Tail mass discarded when an unbounded support is truncated to a box.
pub const TRUNCATION_MASS: f64 = 1e-12;

/// Attempts allowed per accepted point in the rejection sampler.
const MAX_ATTEMPTS_PER_POINT: u64 = 1_000_000;

/// Axis-aligned box `[lo_1, hi_1) x ... x [lo_d, hi_d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box corners must have equal, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("box corners must be finite with lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; d], hi: vec![hi; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Half-open membership, so boxes that tile a region partition it.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v < *b)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        if self.dim() != other.dim() {
            return None;
        }
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return None;
        }
        Some(BoxRegion { lo, hi })
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(&self.lo).zip(&self.hi) {
            *o = a + (b - a) * rng.random::<f64>();
        }
    }
}

/// Regular grid table of density values, interpolated multilinearly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub region: BoxRegion,
    /// Nodes per axis (at least 2 each).
    pub shape: Vec<usize>,
    /// Node values in row-major order (last axis fastest).
    pub values: Vec<f64>,
}

impl GridTable {
    fn validate(&self) -> Result<()> {
        let d = self.region.dim();
        if self.shape.len() != d || self.shape.iter().any(|&m| m < 2) {
            return Err(invalid("grid shape must list at least 2 nodes per axis"));
        }
        let expected: usize = self.shape.iter().product();
        if self.values.len() != expected {
            return Err(invalid(format!(
                "grid expects {expected} values, got {}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("grid values must be finite and nonnegative"));
        }
        Ok(())
    }

    fn interpolate(&self, x: &[f64]) -> f64 {
        if !self.region.contains(x) {
            return 0.0;
        }
        let d = x.len();
        let mut base = 0usize;
        let mut fracs = [0.0f64; 16];
        let mut strides = [0usize; 16];
        let mut stride = 1usize;
        for axis in (0..d).rev() {
            let m = self.shape[axis];
            let (a, b) = (self.region.lo[axis], self.region.hi[axis]);
            let pos = (x[axis] - a) / (b - a) * (m - 1) as f64;
            let cell = (pos.floor() as usize).min(m - 2);
            fracs[axis] = pos - cell as f64;
            strides[axis] = stride;
            base += cell * stride;
            stride *= m;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base;
            for axis in 0..d {
                if corner >> axis & 1 == 1 {
                    w *= fracs[axis];
                    idx += strides[axis];
                } else {
                    w *= 1.0 - fracs[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    /// Exact integral of the multilinear interpolant (trapezoid rule on nodes).
    fn interpolant_integral(&self) -> f64 {
        let d = self.region.dim();
        let cell: Vec<f64> = (0..d)
            .map(|a| (self.region.hi[a] - self.region.lo[a]) / (self.shape[a] - 1) as f64)
            .collect();
        let mut total = 0.0;
        let mut index = vec![0usize; d];
        for v in &self.values {
            let mut w = 1.0;
            for a in 0..d {
                let edge = index[a] == 0 || index[a] == self.shape[a] - 1;
                w *= if edge { 0.5 * cell[a] } else { cell[a] };
            }
            total += w * v;
            for a in (0..d).rev() {
                index[a] += 1;
                if index[a] < self.shape[a] {
                    break;
                }
                index[a] = 0;
            }
        }
        total
    }
}

/// Serializable description of a density, as it appears in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Uniform on `[0, side)^d`.
    UniformCube {
        d: usize,
        #[serde(default = "one")]
        side: f64,
    },
    /// Centered isotropic Gaussian with standard deviation `scale`,
    /// truncated to `[-half_width, half_width)^d` and renormalized.
    TruncatedGaussian {
        d: usize,
        scale: f64,
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// Grid table, normalized to integrate to one.
    CustomGrid(GridTable),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Uniform { side: f64 },
    Gaussian { scale: f64, half_width: f64, axis_mass: f64 },
    Grid { table: GridTable, norm: f64 },
}

/// A bounded probability density with a box containing its (truncated) support.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    dim: usize,
    kind: Kind,
    sup_norm: f64,
    support: BoxRegion,
    spec: DensitySpec,
}

impl Density {
    pub fn from_spec(spec: &DensitySpec) -> Result<Self> {
        match spec {
            DensitySpec::UniformCube { d, side } => Self::uniform_cube(*d, *side),
            DensitySpec::TruncatedGaussian { d, scale, half_width } => {
                Self::truncated_gaussian_with(*d, *scale, *half_width)
            }
            DensitySpec::CustomGrid(table) => Self::grid(table.clone()),
        }
    }

    pub fn uniform_cube(d: usize, side: f64) -> Result<Self> {
        check_dim(d)?;
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("cube side must be positive"));
        }
        Ok(Self {
            dim: d,
            kind: Kind::Uniform { side },
            sup_norm: side.powi(-(d as i32)),
            support: BoxRegion::cube(d, 0.0, side),
            spec: DensitySpec::UniformCube { d, side },
        })
    }

    pub fn truncated_gaussian(d: usize, scale: f64) -> Result<Self> {
        Self::truncated_gaussian_with(d, scale, None)
    }

    pub fn truncated_gaussian_with(d: usize, scale: f64, half_width: Option<f64>) -> Result<Self> {
        check_dim(d)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("gaussian scale must be positive"));
        }
        let half_width = match half_width {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(_) => return Err(invalid("truncation half-width must be positive")),
            None => scale * truncation_quantile(TRUNCATION_MASS / d as f64),
        };
        let axis_mass = erf(half_width / (scale * 2f64.sqrt()));
        let peak = 1.0 / (scale * (2.0 * PI).sqrt() * axis_mass);
        Ok(Self {
            dim: d,
            kind: Kind::Gaussian { scale, half_width, axis_mass },
            sup_norm: peak.powi(d as i32),
            support: BoxRegion::cube(d, -half_width, half_width),
            spec: DensitySpec::TruncatedGaussian { d, scale, half_width: Some(half_width) },
        })
    }

    pub fn grid(table: GridTable) -> Result<Self> {
        table.validate()?;
        check_dim(table.region.dim())?;
        let norm = table.interpolant_integral();
        if !(norm > 0.0) {
            return Err(invalid("grid density has zero mass"));
        }
        let max = table.values.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            dim: table.region.dim(),
            sup_norm: max / norm,
            support: table.region.clone(),
            spec: DensitySpec::CustomGrid(table.clone()),
            kind: Kind::Grid { table, norm },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `‖f‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn support(&self) -> &BoxRegion {
        &self.support
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, Kind::Uniform { .. })
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if !self.support.contains(x) {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform { .. } => self.sup_norm,
            Kind::Gaussian { scale, .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                self.sup_norm * (-0.5 * r2 / (scale * scale)).exp()
            }
            Kind::Grid { table, norm } => table.interpolate(x) / norm,
        }
    }

    /// `∫_A f(x)^p dx`, with `A` the whole space when `region` is `None`.
    pub fn power_integral(&self, p: f64, region: Option<&BoxRegion>) -> f64 {
        let domain = match region {
            None => self.support.clone(),
            Some(a) => match self.support.intersect(a) {
                Some(b) => b,
                None => return 0.0,
            },
        };
        match &self.kind {
            Kind::Uniform { .. } => domain.volume() * self.sup_norm.powf(p),
            Kind::Gaussian { scale, axis_mass, .. } => {
                let s = *scale;
                let c = (2.0 * PI * s * s).powf(-0.5 * p) * axis_mass.powf(-p);
                let z = p.sqrt() / (s * 2f64.sqrt());
                let width = s * (PI / (2.0 * p)).sqrt();
                domain
                    .lo
                    .iter()
                    .zip(&domain.hi)
                    .map(|(a, b)| c * width * (erf(b * z) - erf(a * z)))
                    .product()
            }
            Kind::Grid { .. } => {
                let cells = quadrature_cells(self.dim);
                box_quadrature(&domain, cells, |x| self.evaluate(x).powf(p))
            }
        }
    }

    /// Probability mass of `region`.
    pub fn mass(&self, region: Option<&BoxRegion>) -> f64 {
        self.power_integral(1.0, region)
    }

    /// One draw from `f` restricted to `region` (whole support when `None`).
    pub fn sample_point<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        region: Option<&BoxRegion>,
        out: &mut [f64],
    ) -> Result<()> {
        let domain = match region {
            None => std::borrow::Cow::Borrowed(&self.support),
            Some(a) => match self.support.intersect(a) {
                Some(b) => std::borrow::Cow::Owned(b),
                None => return Err(invalid("sampling region misses the support")),
            },
        };
        if self.is_uniform() {
            domain.sample_uniform(rng, out);
            return Ok(());
        }
        for _ in 0..MAX_ATTEMPTS_PER_POINT {
            domain.sample_uniform(rng, out);
            let value = self.evaluate(out);
            if value > self.sup_norm * (1.0 + 1e-9) {
                return Err(Error::EnvelopeViolated { value, sup_norm: self.sup_norm });
            }
            if rng.random::<f64>() * self.sup_norm < value {
                return Ok(());
            }
        }
        Err(Error::SamplerExhausted { attempts: MAX_ATTEMPTS_PER_POINT })
    }
}

fn check_dim(d: usize) -> Result<()> {
    if !(2..=16).contains(&d) {
        return Err(invalid(format!("dimension {d} unsupported (need 2 <= d <= 16)")));
    }
    Ok(())
}

/// Smallest `z` with `erfc(z / √2) <= tail` (two-sided Gaussian tail).
fn truncation_quantile(tail: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid / 2f64.sqrt()) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn quadrature_cells(d: usize) -> usize {
    ((2.0e6f64).powf(1.0 / d as f64).floor() as usize).max(2)
}

/// Midpoint rule over `region` with `cells` subdivisions per axis.
pub fn box_quadrature(region: &BoxRegion, cells: usize, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = region.dim();
    let h: Vec<f64> = (0..d).map(|a| (region.hi[a] - region.lo[a]) / cells as f64).collect();
    let cell_volume: f64 = h.iter().product();
    let mut index = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        for a in 0..d {
            x[a] = region.lo[a] + (index[a] as f64 + 0.5) * h[a];
        }
        total += g(&x);
        let mut a = d;
        loop {
            if a == 0 {
                return total * cell_volume;
            }
            a -= 1;
            index[a] += 1;
            if index[a] < cells {
                break;
            }
            index[a] = 0;
        }
    }
}

/// `θ_d = π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    PI.powf(half) / gamma(half + 1.0)
}

/// `C_{f,k} = (k+2)!^{-1} ∫ f^{k+2}`.
pub fn c_f_k(density: &Density, k: usize) -> Result<f64> {
    c_f_k_on(density, k, None)
}

/// `C_{f,k}` with the integral restricted to `region`.
pub fn c_f_k_on(density: &Density, k: usize, region: Option<&BoxRegion>) -> Result<f64> {
    let d = density.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    Ok(density.power_integral((k + 2) as f64, region) / factorial(k + 2))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// A realization of the Poisson process `𝒫_n` with its radius scale `s_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    /// Intensity multiplier `n` the cloud was drawn with.
    pub intensity: f64,
    /// Radius scale `s_n`; radii are `r_n(t) = s_n t`.
    pub scale: f64,
    pub seed: Option<u64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>, scale: f64) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(invalid("coordinate buffer is not a multiple of the dimension"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("scale must be positive"));
        }
        let intensity = (coords.len() / dim) as f64;
        Ok(Self { dim, coords, intensity, scale, seed: None })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>], scale: f64) -> Result<Self> {
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("point of wrong dimension"));
        }
        Self::new(dim, points.concat(), scale)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Writes `# d=.. n=.. scale=.. seed=..` followed by one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(w, "# d={} n={} scale={} seed={}", self.dim, self.intensity, self.scale, seed)?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (a, v) in p.iter().enumerate() {
                if a > 0 {
                    line.push(',');
                }
                write!(line, "{v}").expect("write to string");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(usize, f64, f64, Option<u64>)> = None;
        let mut coords = Vec::new();
        let mut dim_seen: Option<usize> = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if header.is_none() {
                    header = Some(parse_cloud_header(meta, lineno + 1)?);
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: lineno + 1, message: e.to_string() })?;
            match dim_seen {
                None => dim_seen = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Parse { line: lineno + 1, message: "ragged row".into() })
                }
                _ => {}
            }
            coords.extend(row);
        }
        let (dim, intensity, scale, seed) = match header {
            Some(h) => h,
            None => (dim_seen.unwrap_or(0), 0.0, 1.0, None),
        };
        if let Some(d) = dim_seen {
            if d != dim {
                return Err(Error::Parse { line: 1, message: format!("header d={dim} but rows have {d}") });
            }
        }
        let mut cloud = PointCloud::new(dim.max(1), coords, scale)?;
        cloud.dim = dim.max(1);
        cloud.intensity = intensity;
        cloud.seed = seed;
        Ok(cloud)
    }
}

fn parse_cloud_header(meta: &str, line: usize) -> Result<(usize, f64, f64, Option<u64>)> {
    let bad = |m: &str| Error::Parse { line, message: m.to_string() };
    let mut d = None;
    let mut n = 0.0;
    let mut scale = 1.0;
    let mut seed = None;
    for field in meta.split_whitespace() {
        let Some((key, value)) = field.split_once('=') else { continue };
        match key {
            "d" => d = Some(value.parse::<usize>().map_err(|_| bad("bad d"))?),
            "n" => n = value.parse::<f64>().map_err(|_| bad("bad n"))?,
            "scale" => scale = value.parse::<f64>().map_err(|_| bad("bad scale"))?,
            "seed" if value == "none" => seed = None,
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("bad seed"))?),
            _ => {}
        }
    }
    Ok((d.ok_or_else(|| bad("header lacks d="))?, n, scale, seed))
}

/// Draws `𝒫_n`: a `Poisson(n)` count of i.i.d. points with density `f`.
pub fn sample_poisson_process<R: Rng + ?Sized>(
    density: &Density,
    n: f64,
    scale: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid("intensity n must be positive"));
    }
    let count = Poisson::new(n).map_err(|e| invalid(e.to_string()))?.sample(rng) as usize;
    let mut cloud = sample_points(density, count, scale, rng)?;
    cloud.intensity = n;
    Ok(cloud)
}

/// Draws exactly `count` i.i.d. points with density `f`.
pub fn sample_points<R: Rng + ?Sized>(
    density: &Density,
    count: usize,
    scale: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    let d = density.dim();
    let mut coords = vec![0.0; count * d];
    for chunk in coords.chunks_exact_mut(d) {
        density.sample_point(rng, None, chunk)?;
    }
    PointCloud::new(d, coords, scale)
}
