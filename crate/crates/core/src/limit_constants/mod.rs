//! Monte Carlo estimates of the limit constants: D-volumes, the sparse
//! covariance `μ`, union-of-balls volumes, and the critical-regime kernels
//! `η`, `ν` with their truncated sum `Φ^{(M)}`.
//!
//! All estimators split their samples into fixed chunks, each drawn from its
//! own stream of the supplied seed, and merge chunk statistics in chunk
//! order. Results therefore do not depend on the number of worker threads.

mod critical;
mod dvolume;
mod geom;
mod union;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{stream_rng, StreamRng};

pub use critical::{
    eta, eta_grid, mean_truncated, nu, nu_grid, phi_truncated, CriticalOptions, ExpFactor, Proposal, Weighting,
};
pub use dvolume::{mu, mu_matrix, volume_d, volume_d1, DVolumeTable, Sign};
pub use geom::{connection_threshold, sample_in_ball, small_config_bars};
pub use union::{union_ball_mass, union_ball_volume, union_ball_volume_radii};

/// Samples drawn per chunk (and per random stream).
pub const CHUNK: u64 = 4096;

/// Mean of i.i.d. evaluations with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn exact(value: f64, samples: u64, seed: u64) -> Self {
        Self { value, std_error: 0.0, samples, seed }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self { value: self.value * c, std_error: self.std_error * c.abs(), ..self }
    }

    /// Within `z` combined standard errors of `other` (independent estimates).
    pub fn agrees_with(&self, other: &McEstimate, z: f64) -> bool {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.value - other.value).abs() <= z * se
    }
}

/// Running mean and centered second moment, mergeable (Chan et al.).
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self, seed: u64) -> McEstimate {
        let se = if self.count < 2 { 0.0 } else { (self.variance() / self.count as f64).sqrt() };
        McEstimate { value: self.mean, std_error: se, samples: self.count, seed }
    }
}

/// Means of `outputs` simultaneous integrands; `eval` fills one sample.
pub fn mc_vec<F>(samples: u64, seed: u64, outputs: usize, eval: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut StreamRng, &mut [f64]) -> Result<()> + Sync,
{
    mc_vec_with(samples, seed, outputs, || (), |_, rng, out| eval(rng, out))
}

/// [`mc_vec`] with per-chunk scratch state built by `init`.
pub fn mc_vec_with<S, I, F>(samples: u64, seed: u64, outputs: usize, init: I, eval: F) -> Result<Vec<McEstimate>>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &mut StreamRng, &mut [f64]) -> Result<()> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<Moments>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let mut state = init();
            let mut acc = vec![Moments::default(); outputs];
            let mut buf = vec![0.0; outputs];
            let len = CHUNK.min(samples - c * CHUNK);
            for _ in 0..len {
                buf.iter_mut().for_each(|b| *b = 0.0);
                eval(&mut state, &mut rng, &mut buf)?;
                for (a, b) in acc.iter_mut().zip(&buf) {
                    a.push(*b);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Moments::default(); outputs];
    for chunk in per_chunk {
        for (t, c) in total.iter_mut().zip(chunk?) {
            t.merge(&c);
        }
    }
    Ok(total.iter().map(|m| m.estimate(seed)).collect())
}

/// Scalar version of [`mc_vec`].
pub fn mc_mean<F>(samples: u64, seed: u64, eval: F) -> Result<McEstimate>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    Ok(mc_vec(samples, seed, 1, |rng, out| {
        out[0] = eval(rng)?;
        Ok(())
    })?[0])
}

/// Symmetric matrix of estimates over a `t`-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCovariance {
    pub regime: String,
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub samples: u64,
    pub seed: u64,
}

impl LimitCovariance {
    pub fn from_estimates(regime: &str, grid: &[f64], est: &[McEstimate], samples: u64, seed: u64) -> Self {
        let g = grid.len();
        let values = (0..g).map(|a| (0..g).map(|b| est[a * g + b].value).collect()).collect();
        let std_errors = (0..g).map(|a| (0..g).map(|b| est[a * g + b].std_error).collect()).collect();
        Self { regime: regime.to_string(), grid: grid.to_vec(), values, std_errors, samples, seed }
    }

    pub fn get(&self, a: usize, b: usize) -> McEstimate {
        McEstimate { value: self.values[a][b], std_error: self.std_errors[a][b], samples: self.samples, seed: self.seed }
    }

    pub fn is_symmetric(&self) -> bool {
        let g = self.grid.len();
        (0..g).all(|a| (0..g).all(|b| self.values[a][b] == self.values[b][a]))
    }
}

/// A constant as emitted by the `constants` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub name: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl ConstantRecord {
    pub fn new(name: &str, params: serde_json::Value, est: McEstimate) -> Self {
        Self {
            name: name.to_string(),
            params,
            value: est.value,
            std_error: est.std_error,
            samples: est.samples,
            seed: est.seed,
        }
    }
}
