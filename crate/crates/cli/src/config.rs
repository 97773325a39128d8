//! The JSON configuration document. Unknown keys are rejected everywhere;
//! `resolved` fills every default so the echoed config is complete.

use std::path::PathBuf;

use cech_betti::experiments::RegimeConfig;
use cech_betti::limit_constants::{CriticalOptions, Sign};
use cech_betti::pointproc::DensitySpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub betti: Option<BettiConfig>,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub experiment: Option<RegimeConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub density: DensitySpec,
    /// Intensity `n` of the Poisson process.
    pub n: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

/// A cloud is read from `input` or sampled from `generate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BettiConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<SampleConfig>,
    pub k: usize,
    pub t_max: f64,
    /// Radii for the census and `L_{k,n}` tables; defaults to `[t_max]`.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_budget")]
    pub simplex_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default)]
    pub seed: u64,
    pub requests: Vec<ConstantRequest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstantRequest {
    D1Volume {
        k: usize,
        d: usize,
        sign: Sign,
        samples: u64,
    },
    #[serde(rename = "c_f_k")]
    CFK {
        density: DensitySpec,
        k: usize,
    },
    Mu {
        density: DensitySpec,
        k: usize,
        t1: f64,
        t2: f64,
        samples: u64,
    },
    Eta {
        density: DensitySpec,
        k: usize,
        i: usize,
        j1: usize,
        j2: usize,
        t1: f64,
        t2: f64,
        samples: u64,
        #[serde(default)]
        options: CriticalOptions,
    },
    Nu {
        density: DensitySpec,
        k: usize,
        i1: usize,
        i2: usize,
        j1: usize,
        j2: usize,
        t1: f64,
        t2: f64,
        samples: u64,
        #[serde(default)]
        options: CriticalOptions,
    },
    Phi {
        density: DensitySpec,
        k: usize,
        m: usize,
        grid: Vec<f64>,
        eta_samples: u64,
        nu_samples: u64,
        #[serde(default)]
        options: CriticalOptions,
    },
    UnionBallVolume {
        centers: Vec<Vec<f64>>,
        r: f64,
        samples: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_budget() -> usize {
    cech_betti::cechcore::DEFAULT_SIMPLEX_BUDGET
}

impl Config {
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if let Some(b) = c.betti.as_mut() {
            if b.grid.is_none() {
                b.grid = Some(vec![b.t_max]);
            }
        }
        if let Some(e) = c.experiment.as_mut() {
            *e = e.resolved();
        }
        c
    }
}
