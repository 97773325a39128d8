//! Volumes of the empty-simplex sets `D_t^± = {y : h_t^±(0, y) = 1}` and the
//! sparse-regime covariance `μ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geom::sample_in_ball;
use super::{LimitCovariance, McEstimate, CHUNK};
use crate::cechcore::empty_simplex_times;
use crate::error::{Error, Result};
use crate::pointproc::{factorial, unit_ball_volume, BoxRegion, Density};
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// `(τ⁺, τ⁻)` of `(0, y)` for `y` uniform on `B(0, R)^{k+1}`.
///
/// `h_t^±(0, y) = 1` forces every `|y_i| <= t`, so for `t <= R` every
/// D-volume and every overlap of two of them is a mean over this table.
#[derive(Clone, Debug)]
pub struct DVolumeTable {
    pub k: usize,
    pub d: usize,
    pub radius: f64,
    pub seed: u64,
    times: Vec<(f64, f64)>,
}

impl DVolumeTable {
    pub fn sample(k: usize, d: usize, radius: f64, samples: u64, seed: u64) -> Result<Self> {
        if k < 1 || k >= d {
            return Err(Error::DegreeOutOfRange { k, d });
        }
        if !(radius > 0.0) {
            return Err(crate::error::invalid("table radius must be positive"));
        }
        let chunks = samples.div_ceil(CHUNK);
        let parts: Vec<Vec<(f64, f64)>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(seed, c);
                let len = CHUNK.min(samples - c * CHUNK);
                let origin = vec![0.0; d];
                let mut pts = vec![0.0; d * (k + 2)];
                let mut out = Vec::with_capacity(len as usize);
                for _ in 0..len {
                    for p in 1..k + 2 {
                        sample_in_ball(&mut rng, &origin, radius, &mut pts[p * d..(p + 1) * d]);
                    }
                    let refs: Vec<&[f64]> = pts.chunks_exact(d).collect();
                    out.push(empty_simplex_times(&refs));
                }
                out
            })
            .collect();
        Ok(Self { k, d, radius, seed, times: parts.concat() })
    }

    pub fn samples(&self) -> u64 {
        self.times.len() as u64
    }

    /// `m(B(0, R)^{k+1})`, the volume the table samples from.
    pub fn domain_volume(&self) -> f64 {
        (unit_ball_volume(self.d) * self.radius.powi(self.d as i32)).powi(self.k as i32 + 1)
    }

    fn mean_of(&self, f: impl Fn(f64, f64) -> f64) -> McEstimate {
        let mut m = super::Moments::default();
        for &(p, q) in &self.times {
            m.push(f(p, q));
        }
        m.estimate(self.seed).scaled(self.domain_volume())
    }

    fn check(&self, t: f64) {
        assert!(t <= self.radius * (1.0 + 1e-12), "t = {t} beyond table radius {}", self.radius);
    }

    /// `m(D_t^±)`.
    pub fn volume(&self, sign: Sign, t: f64) -> McEstimate {
        self.check(t);
        match sign {
            Sign::Plus => self.mean_of(|p, _| f64::from(u8::from(p <= t))),
            Sign::Minus => self.mean_of(|_, q| f64::from(u8::from(q <= t))),
        }
    }

    /// `m(D_t) = ∫ h_t(0, y) dy`.
    pub fn volume_h(&self, t: f64) -> McEstimate {
        self.h_integral(t, t)
    }

    /// `∫ h_{t1}(0, y) h_{t2}(0, y) dy`.
    pub fn h_integral(&self, t1: f64, t2: f64) -> McEstimate {
        self.check(t1.max(t2));
        self.mean_of(|p, q| {
            let h1 = p <= t1 && t1 < q;
            let h2 = p <= t2 && t2 < q;
            f64::from(u8::from(h1 && h2))
        })
    }

    /// `m(D_s^a ∩ D_t^b)`.
    pub fn cross_volume(&self, a: Sign, s: f64, b: Sign, t: f64) -> McEstimate {
        self.check(s.max(t));
        let pick = |sign: Sign, p: f64, q: f64| if sign == Sign::Plus { p } else { q };
        self.mean_of(|p, q| f64::from(u8::from(pick(a, p, q) <= s && pick(b, p, q) <= t)))
    }
}

/// `m_k(D_1^±)` in ambient dimension `d`.
pub fn volume_d1(k: usize, d: usize, sign: Sign, samples: u64, seed: u64) -> Result<McEstimate> {
    volume_d(k, d, sign, 1.0, samples, seed)
}

/// `m_k(D_t^±)`, sampled on `B(0, t)^{k+1}`.
pub fn volume_d(k: usize, d: usize, sign: Sign, t: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    Ok(DVolumeTable::sample(k, d, t, samples, seed)?.volume(sign, t))
}

/// `μ_{k,A}(t1, t2) = (k+2)!^{-1} ∫_A f^{k+2} · ∫ h_{t1}(0,y) h_{t2}(0,y) dy`.
pub fn mu(
    k: usize,
    region: Option<&BoxRegion>,
    t1: f64,
    t2: f64,
    density: &Density,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let d = density.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    if t1.min(t2) <= 0.0 {
        return Ok(McEstimate::exact(0.0, samples, seed));
    }
    let c = density.power_integral((k + 2) as f64, region) / factorial(k + 2);
    let table = DVolumeTable::sample(k, d, t1.max(t2), samples, seed)?;
    Ok(table.h_integral(t1, t2).scaled(c))
}

/// `μ̂(t_a, t_b)` over a grid, all entries from one table on `B(0, max t)`.
pub fn mu_matrix(
    k: usize,
    region: Option<&BoxRegion>,
    grid: &[f64],
    density: &Density,
    samples: u64,
    seed: u64,
) -> Result<LimitCovariance> {
    let d = density.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    let c = density.power_integral((k + 2) as f64, region) / factorial(k + 2);
    let t_max = grid.iter().cloned().fold(0.0, f64::max);
    let g = grid.len();
    let mut est = vec![McEstimate::exact(0.0, samples, seed); g * g];
    if t_max > 0.0 {
        let table = DVolumeTable::sample(k, d, t_max, samples, seed)?;
        for a in 0..g {
            for b in 0..g {
                if grid[a].min(grid[b]) > 0.0 {
                    est[a * g + b] = table.h_integral(grid[a], grid[b]).scaled(c);
                }
            }
        }
    }
    Ok(LimitCovariance::from_estimates("sparse", grid, &est, samples, seed))
}
