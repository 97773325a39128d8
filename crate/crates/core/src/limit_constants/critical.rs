//! Critical-regime kernels `η`, `ν` and the truncated covariance `Φ^{(M)}`.
//!
//! Each sample places an anchor `x ~ f|_A` and a cluster `{0, y}` drawn from
//! a proposal covering every configuration that is connected at the largest
//! grid radius, and weights the integrand by the inverse proposal density.
//! One sample serves every pair of grid radii at once.
//!
//! The factor `exp(-f(x) m(U))` for a union of balls `U` is, by default,
//! replaced by the indicator that an independent Poisson process of
//! intensity `f(x)` leaves `U` empty. That indicator has exactly the right
//! mean, so the estimators stay unbiased. `ExpFactor::Nested` instead plugs a
//! Monte Carlo volume into the exponential.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geom::{alive, connection_threshold, dist2, small_config_bars, TreeProposal};
use super::union::{bounding_box, poisson_points};
use super::{mc_vec_with, LimitCovariance, McEstimate};
use crate::error::{invalid, Error, Result};
use crate::pointproc::{factorial, BoxRegion, Density};
use crate::rng::derive_seed;

/// Proposal for the relative positions `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Proposal {
    /// Random spanning trees with edges up to the largest grid radius.
    Tree,
    /// Uniform on the cube of half-width `enlarge · (i-1) · t_max` per point.
    Box { enlarge: f64 },
}

/// How `exp(-f(x) m(U))` is estimated inside each sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExpFactor {
    /// Void indicator of an auxiliary Poisson process (unbiased).
    Void,
    /// `exp(-f(x) V̂)` with `V̂` from `inner` uniform points (slightly biased).
    Nested { inner: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalOptions {
    pub proposal: Proposal,
    pub exp_factor: ExpFactor,
    /// Use `exp(-(t1 ∨ t2)^d f(x) m(ℬ({0,y}; 1)))` in `η` instead of the
    /// radius-`t1 ∨ t2` union.
    pub literal_exponent: bool,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self { proposal: Proposal::Tree, exp_factor: ExpFactor::Void, literal_exponent: false }
    }
}

/// What multiplies the integrand at radii `(t_a, t_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// `β_k(t_a) β_k(t_b)`, i.e. `Σ_{j1,j2} j1 j2 b_{j1,t_a} b_{j2,t_b}`.
    Betti,
    /// `b_{j1,t_a} b_{j2,t_b}`.
    Classes { j1: usize, j2: usize },
}

impl Weighting {
    fn vanishes_without_cycles(&self) -> bool {
        match *self {
            Weighting::Betti => true,
            Weighting::Classes { j1, j2 } => j1 > 0 && j2 > 0,
        }
    }

    fn weights(&self, bars: &[(f64, f64)], grid: &[f64], first: bool, out: &mut Vec<f64>) {
        out.clear();
        out.extend(grid.iter().map(|&t| {
            let beta = alive(bars, t);
            match *self {
                Weighting::Betti => beta as f64,
                Weighting::Classes { j1, j2 } => {
                    let j = if first { j1 } else { j2 };
                    f64::from(u8::from(beta == j))
                }
            }
        }));
    }
}

struct Anchor<'a> {
    density: &'a Density,
    region: Option<&'a BoxRegion>,
    mass: f64,
}

impl<'a> Anchor<'a> {
    fn new(density: &'a Density, region: Option<&'a BoxRegion>) -> Self {
        Self { density, region, mass: density.mass(region) }
    }

    /// Draws `x ~ f|_A` and returns `f(x)`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> Result<f64> {
        self.density.sample_point(rng, self.region, x)?;
        Ok(self.density.evaluate(x))
    }
}

fn check_grid(k: usize, d: usize, grid: &[f64]) -> Result<f64> {
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("radius grid must be nonempty and nonnegative"));
    }
    Ok(grid.iter().cloned().fold(0.0, f64::max))
}

/// Draws `m` free points after the ones in `pts`, returning the proposal density.
fn propose_cluster<R: Rng + ?Sized>(
    rng: &mut R,
    proposal: Proposal,
    tree: &TreeProposal,
    pts: &mut Vec<f64>,
    m: usize,
) -> f64 {
    let d = tree.d;
    let root_len = pts.len();
    match proposal {
        Proposal::Tree => {
            tree.grow(rng, pts, m);
            tree.density(&pts[..d], &pts[root_len..])
        }
        Proposal::Box { enlarge } => {
            let half = enlarge * (m as f64) * tree.rho;
            for _ in 0..m * d {
                pts.push(half * (2.0 * rng.random::<f64>() - 1.0));
            }
            (2.0 * half).powi(-((m * d) as i32))
        }
    }
}

#[derive(Default)]
struct Scratch {
    x: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    ppp: Vec<f64>,
    aux: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    e: Vec<f64>,
    near: Vec<(f64, f64)>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn min_dist(pts: &[f64], x: &[f64]) -> f64 {
    pts.chunks_exact(x.len()).map(|p| dist2(p, x)).fold(f64::INFINITY, f64::min).sqrt()
}

/// Fills `e[g] ≈ exp(-fx · m(ℬ(pts; grid[g])))` (or its literal variant).
#[allow(clippy::too_many_arguments)]
fn void_factors<R: Rng + ?Sized>(
    rng: &mut R,
    opts: &CriticalOptions,
    d: usize,
    pts: &[f64],
    fx: f64,
    grid: &[f64],
    t_max: f64,
    s: &mut Scratch,
) {
    let m = pts.len() / d;
    s.e.clear();
    if opts.literal_exponent {
        // exp(-t^d fx m(ℬ(pts; 1))) for each grid radius t
        let bbox = bounding_box(d, pts, &vec![1.0; m]);
        match opts.exp_factor {
            ExpFactor::Void => {
                for &t in grid {
                    poisson_points(rng, &bbox, fx * t.powi(d as i32), &mut s.ppp);
                    let empty = s.ppp.chunks_exact(d).all(|p| min_dist(pts, p) > 1.0);
                    s.e.push(f64::from(u8::from(empty)));
                }
            }
            ExpFactor::Nested { inner } => {
                let v = nested_volume(rng, &bbox, pts, inner, 1.0, &mut s.aux);
                s.e.extend(grid.iter().map(|t| (-t.powi(d as i32) * fx * v).exp()));
            }
        }
        return;
    }
    let bbox = bounding_box(d, pts, &vec![t_max; m]);
    match opts.exp_factor {
        ExpFactor::Void => {
            poisson_points(rng, &bbox, fx, &mut s.ppp);
            let nearest = s.ppp.chunks_exact(d).map(|p| min_dist(pts, p)).fold(f64::INFINITY, f64::min);
            s.e.extend(grid.iter().map(|&t| f64::from(u8::from(nearest > t))));
        }
        ExpFactor::Nested { inner } => {
            let vol = bbox.volume();
            s.aux.clear();
            let mut u = vec![0.0; d];
            for _ in 0..inner {
                bbox.sample_uniform(rng, &mut u);
                s.aux.push(min_dist(pts, &u));
            }
            for &t in grid {
                let hits = s.aux.iter().filter(|&&r| r <= t).count();
                s.e.push((-fx * vol * hits as f64 / inner as f64).exp());
            }
        }
    }
}

fn nested_volume<R: Rng + ?Sized>(
    rng: &mut R,
    bbox: &BoxRegion,
    pts: &[f64],
    inner: u64,
    r: f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    let d = bbox.dim();
    scratch.resize(d, 0.0);
    let mut hits = 0u64;
    for _ in 0..inner {
        bbox.sample_uniform(rng, scratch);
        if min_dist(pts, scratch) <= r {
            hits += 1;
        }
    }
    bbox.volume() * hits as f64 / inner as f64
}

/// `η^{(i, ·, ·)}(t_a, t_b)` for every pair of grid radii, row-major.
#[allow(clippy::too_many_arguments)]
pub fn eta_grid(
    k: usize,
    i: usize,
    grid: &[f64],
    density: &Density,
    region: Option<&BoxRegion>,
    weighting: Weighting,
    opts: &CriticalOptions,
    samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let d = density.dim();
    let t_max = check_grid(k, d, grid)?;
    if i < k + 2 {
        return Err(invalid(format!("component size {i} below k + 2")));
    }
    let g = grid.len();
    if t_max <= 0.0 {
        return Ok(vec![McEstimate::exact(0.0, samples, seed); g * g]);
    }
    let anchor = Anchor::new(density, region);
    let tree = TreeProposal::new(d, t_max);
    mc_vec_with(samples, seed, g * g, Scratch::default, |s, rng, out| {
        s.x.resize(d, 0.0);
        let fx = anchor.sample(rng, &mut s.x)?;
        let wx = anchor.mass * fx.powi(i as i32 - 1);
        s.p1.clear();
        s.p1.resize(d, 0.0);
        let q = propose_cluster(rng, opts.proposal, &tree, &mut s.p1, i - 1);
        if q <= 0.0 {
            return Ok(());
        }
        let conn = connection_threshold(d, &s.p1);
        if conn > t_max {
            return Ok(());
        }
        let bars = small_config_bars(d, &s.p1, k, t_max);
        weighting.weights(&bars, grid, true, &mut s.w1);
        weighting.weights(&bars, grid, false, &mut s.w2);
        // skipping must not depend on the weighting, so that every weighting
        // consumes the same random numbers
        if bars.is_empty() && weighting.vanishes_without_cycles() {
            return Ok(());
        }
        let p1 = std::mem::take(&mut s.p1);
        void_factors(rng, opts, d, &p1, fx, grid, t_max, s);
        s.p1 = p1;
        let scale = wx / q;
        for a in 0..g {
            for b in 0..g {
                let (lo, hi) = if grid[a] <= grid[b] { (a, b) } else { (b, a) };
                if conn <= grid[lo] {
                    out[a * g + b] = s.w1[a] * s.w2[b] * s.e[hi] * scale;
                }
            }
        }
        Ok(())
    })
}

/// `η_{k,A}^{(i,j1,j2)}(t1, t2)`.
#[allow(clippy::too_many_arguments)]
pub fn eta(
    k: usize,
    i: usize,
    j1: usize,
    j2: usize,
    t1: f64,
    t2: f64,
    density: &Density,
    region: Option<&BoxRegion>,
    opts: &CriticalOptions,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let est = eta_grid(k, i, &[t1, t2], density, region, Weighting::Classes { j1, j2 }, opts, samples, seed)?;
    Ok(est[1])
}

/// `ν^{(i1, i2, ·, ·)}(t_a, t_b)` for every pair of grid radii, row-major.
#[allow(clippy::too_many_arguments)]
pub fn nu_grid(
    k: usize,
    i1: usize,
    i2: usize,
    grid: &[f64],
    density: &Density,
    region: Option<&BoxRegion>,
    weighting: Weighting,
    opts: &CriticalOptions,
    samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let d = density.dim();
    let t_max = check_grid(k, d, grid)?;
    if i1 < k + 2 || i2 < k + 2 {
        return Err(invalid("component sizes must be at least k + 2"));
    }
    let g = grid.len();
    if t_max <= 0.0 {
        return Ok(vec![McEstimate::exact(0.0, samples, seed); g * g]);
    }
    let anchor = Anchor::new(density, region);
    let tree = TreeProposal::new(d, t_max);
    // every point of the second cluster lies this close to the origin
    // whenever the two clusters come within 2 t_max of each other
    let reach = (i1 + i2) as f64 * t_max;
    mc_vec_with(samples, seed, g * g, Scratch::default, |s, rng, out| {
        s.x.resize(d, 0.0);
        let fx = anchor.sample(rng, &mut s.x)?;
        let wx = anchor.mass * fx.powi((i1 + i2) as i32 - 1);
        s.p1.clear();
        s.p1.resize(d, 0.0);
        let q1 = propose_cluster(rng, opts.proposal, &tree, &mut s.p1, i1 - 1);
        s.p2.clear();
        let q2 = match opts.proposal {
            Proposal::Tree => {
                s.p2.resize(d, 0.0);
                let origin = vec![0.0; d];
                super::geom::sample_in_ball(rng, &origin, reach, &mut s.p2[..d]);
                tree.grow(rng, &mut s.p2, i2 - 1);
                tree.density_anchored(&s.p2, reach)
            }
            Proposal::Box { enlarge } => {
                let half = enlarge * reach;
                for _ in 0..i2 * d {
                    s.p2.push(half * (2.0 * rng.random::<f64>() - 1.0));
                }
                (2.0 * half).powi(-((i2 * d) as i32))
            }
        };
        if q1 <= 0.0 || q2 <= 0.0 {
            return Ok(());
        }
        let c1 = connection_threshold(d, &s.p1);
        let c2 = connection_threshold(d, &s.p2);
        if c1 > t_max || c2 > t_max {
            return Ok(());
        }
        let gap = s
            .p1
            .chunks_exact(d)
            .flat_map(|a| s.p2.chunks_exact(d).map(move |b| dist2(a, b)))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        if gap >= 2.0 * t_max {
            return Ok(());
        }
        let bars1 = small_config_bars(d, &s.p1, k, t_max);
        let bars2 = small_config_bars(d, &s.p2, k, t_max);
        weighting.weights(&bars1, grid, true, &mut s.w1);
        weighting.weights(&bars2, grid, false, &mut s.w2);
        if (bars1.is_empty() || bars2.is_empty()) && weighting.vanishes_without_cycles() {
            return Ok(());
        }
        let scale = wx / (q1 * q2);
        let mut both = s.p1.clone();
        both.extend_from_slice(&s.p2);
        let bbox = bounding_box(d, &both, &vec![t_max; both.len() / d]);
        // distances to each cluster from auxiliary points
        match opts.exp_factor {
            ExpFactor::Void => {
                poisson_points(rng, &bbox, fx, &mut s.ppp);
                let (mut n1, mut n2) = (f64::INFINITY, f64::INFINITY);
                for p in s.ppp.chunks_exact(d) {
                    n1 = n1.min(min_dist(&s.p1, p));
                    n2 = n2.min(min_dist(&s.p2, p));
                }
                poisson_points(rng, &bbox, fx, &mut s.aux);
                s.near.clear();
                for p in s.aux.chunks_exact(d) {
                    let (a, b) = (min_dist(&s.p1, p), min_dist(&s.p2, p));
                    if a <= t_max && b <= t_max {
                        s.near.push((a, b));
                    }
                }
                for a in 0..g {
                    for b in 0..g {
                        let (ta, tb) = (grid[a], grid[b]);
                        if c1 > ta || c2 > tb {
                            continue;
                        }
                        let alpha = gap < ta + tb;
                        if !alpha {
                            continue;
                        }
                        let alpha_max = gap < ta.max(tb);
                        let union_empty = n1 > ta && n2 > tb;
                        if !union_empty {
                            continue;
                        }
                        let overlap_empty = s.near.iter().all(|&(x, y)| x > ta || y > tb);
                        let bracket = f64::from(u8::from(!alpha_max)) - f64::from(u8::from(overlap_empty));
                        out[a * g + b] = s.w1[a] * s.w2[b] * bracket * scale;
                    }
                }
            }
            ExpFactor::Nested { inner } => {
                let vol = bbox.volume();
                s.d1.clear();
                s.d2.clear();
                let mut u = vec![0.0; d];
                for _ in 0..inner {
                    bbox.sample_uniform(rng, &mut u);
                    s.d1.push(min_dist(&s.p1, &u));
                    s.d2.push(min_dist(&s.p2, &u));
                }
                let frac = |pred: &dyn Fn(f64, f64) -> bool| {
                    let hits = s.d1.iter().zip(&s.d2).filter(|(x, y)| pred(**x, **y)).count();
                    vol * hits as f64 / inner as f64
                };
                for a in 0..g {
                    for b in 0..g {
                        let (ta, tb) = (grid[a], grid[b]);
                        if c1 > ta || c2 > tb || gap >= ta + tb {
                            continue;
                        }
                        let alpha_max = gap < ta.max(tb);
                        let v_union = frac(&|x, y| x <= ta || y <= tb);
                        let v1 = frac(&|x, _| x <= ta);
                        let v2 = frac(&|_, y| y <= tb);
                        let together = if alpha_max { 0.0 } else { (-fx * v_union).exp() };
                        let apart = (-fx * (v1 + v2)).exp();
                        out[a * g + b] = s.w1[a] * s.w2[b] * (together - apart) * scale;
                    }
                }
            }
        }
        Ok(())
    })
}

/// `ν_{k,A}^{(i1,i2,j1,j2)}(t1, t2)`.
#[allow(clippy::too_many_arguments)]
pub fn nu(
    k: usize,
    i1: usize,
    i2: usize,
    j1: usize,
    j2: usize,
    t1: f64,
    t2: f64,
    density: &Density,
    region: Option<&BoxRegion>,
    opts: &CriticalOptions,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let est = nu_grid(k, i1, i2, &[t1, t2], density, region, Weighting::Classes { j1, j2 }, opts, samples, seed)?;
    Ok(est[1])
}

fn eta_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, 0x100 + i as u64)
}

fn nu_seed(seed: u64, i1: usize, i2: usize) -> u64 {
    derive_seed(seed, 0x10000 + 0x100 * i1 as u64 + i2 as u64)
}

/// `Σ_{i=k+2}^{M} Σ_j (j / i!) η^{(i,j,j)}(t, t)`, the limit of
/// `n^{-1} E β^{(M)}_{k,n}(t)`.
#[allow(clippy::too_many_arguments)]
pub fn mean_truncated(
    m: usize,
    k: usize,
    t: f64,
    density: &Density,
    region: Option<&BoxRegion>,
    opts: &CriticalOptions,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if m < k + 2 {
        return Err(invalid("truncation level must be at least k + 2"));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for i in k + 2..=m {
        // Σ_j j b_j = β_k, so the Betti weighting on the diagonal gives Σ_j j η^{(i,j,j)}
        let est = eta_grid(k, i, &[t], density, region, Weighting::Betti, opts, samples, eta_seed(seed, i))?[0];
        let w = 1.0 / factorial(i);
        value += w * est.value;
        var += (w * est.std_error).powi(2);
    }
    Ok(McEstimate { value, std_error: var.sqrt(), samples, seed })
}

/// `Φ^{(M)}_k(t_a, t_b)` over a grid, symmetrized.
#[allow(clippy::too_many_arguments)]
pub fn phi_truncated(
    m: usize,
    k: usize,
    grid: &[f64],
    density: &Density,
    region: Option<&BoxRegion>,
    opts: &CriticalOptions,
    eta_samples: u64,
    nu_samples: u64,
    seed: u64,
) -> Result<LimitCovariance> {
    if m < k + 2 {
        return Err(invalid("truncation level must be at least k + 2"));
    }
    let g = grid.len();
    let mut value = vec![0.0; g * g];
    let mut var = vec![0.0; g * g];
    let mut add = |est: &[McEstimate], w: f64| {
        for (idx, e) in est.iter().enumerate() {
            value[idx] += w * e.value;
            var[idx] += (w * e.std_error).powi(2);
        }
    };
    for i in k + 2..=m {
        let est = eta_grid(k, i, grid, density, region, Weighting::Betti, opts, eta_samples, eta_seed(seed, i))?;
        add(&est, 1.0 / factorial(i));
    }
    for i1 in k + 2..=m {
        for i2 in k + 2..=m {
            let est =
                nu_grid(k, i1, i2, grid, density, region, Weighting::Betti, opts, nu_samples, nu_seed(seed, i1, i2))?;
            add(&est, 1.0 / (factorial(i1) * factorial(i2)));
        }
    }
    let mut est = vec![McEstimate::exact(0.0, eta_samples, seed); g * g];
    for a in 0..g {
        for b in 0..g {
            let (x, y) = (a * g + b, b * g + a);
            est[x].value = 0.5 * (value[x] + value[y]);
            est[x].std_error = 0.5 * (var[x].sqrt() + var[y].sqrt());
        }
    }
    Ok(LimitCovariance::from_estimates("critical", grid, &est, eta_samples, seed))
}
