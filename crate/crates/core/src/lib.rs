//! Process-level Betti numbers of random Čech complexes built on Poisson
//! point clouds: sampling, exact persistence over GF(2), Monte Carlo limit
//! constants, limit-process simulation and regime experiments.

pub mod betti_process;
pub mod cechcore;
pub mod error;
pub mod experiments;
pub mod homology;
pub mod limit_constants;
pub mod limit_process;
pub mod pointproc;
pub mod rng;

pub use error::{Error, Result};
