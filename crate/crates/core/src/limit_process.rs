//! Direct simulation of the limiting processes on a finite `t`-grid: the
//! sparse-regime Gaussian process `𝒢_k = 𝒢⁺ − 𝒢⁻`, the truncated
//! critical-regime Gaussian process `ℋ^{(M)}`, and the Poisson-regime
//! process `𝒱 = 𝒱⁺ − 𝒱⁻`.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cechcore::empty_simplex_times;
use crate::error::{invalid, Error, Result};
use crate::limit_constants::{sample_in_ball, DVolumeTable, LimitCovariance, Sign};
use crate::pointproc::{c_f_k, unit_ball_volume, Density};
use crate::rng::{stream_rng, StreamRng};

/// Relative tolerance for negative eigenvalues of a covariance estimate.
pub const EIGEN_CLIP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessTag {
    G,
    H,
    V,
}

impl fmt::Display for ProcessTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProcessTag::G => "G",
            ProcessTag::H => "H",
            ProcessTag::V => "V",
        };
        f.write_str(s)
    }
}

/// One path on the grid. `plus`/`minus` hold the coupled parts for `G` and
/// `V` and are empty for `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSample {
    pub replicate: u64,
    pub values: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessEnsemble {
    pub tag: ProcessTag,
    pub grid: Vec<f64>,
    pub seed: u64,
    /// Negative eigenvalues set to zero while factorizing the covariance.
    pub clipped_eigenvalues: usize,
    pub paths: Vec<ProcessSample>,
}

impl ProcessEnsemble {
    /// Values at grid index `g` across replicates.
    pub fn column(&self, g: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values[g]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# process={} grid_points={} replicates={} seed={} clipped_eigenvalues={}",
            self.tag,
            self.grid.len(),
            self.paths.len(),
            self.seed,
            self.clipped_eigenvalues
        )?;
        writeln!(w, "replicate,t,value")?;
        for p in &self.paths {
            for (t, v) in self.grid.iter().zip(&p.values) {
                writeln!(w, "{},{},{}", p.replicate, t, v)?;
            }
        }
        Ok(())
    }
}

/// `L` with `L Lᵀ = cov` after clipping small negative eigenvalues.
#[derive(Clone, Debug)]
pub struct GaussianFactor {
    factor: DMatrix<f64>,
    pub clipped: usize,
}

impl GaussianFactor {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if n != cov.ncols() {
            return Err(invalid("covariance must be square"));
        }
        let sym = (cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut clipped = 0;
        let mut roots = DVector::zeros(n);
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l < 0.0 {
                if l < -EIGEN_CLIP * scale {
                    return Err(Error::IndefiniteCovariance { eigenvalue: l, scale });
                }
                clipped += 1;
            } else {
                roots[i] = l.sqrt();
            }
        }
        let mut factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        // zero-variance coordinates stay exactly zero, not eigen-solver noise
        for i in (0..n).filter(|&i| cov[(i, i)] == 0.0) {
            factor.row_mut(i).fill(0.0);
        }
        Ok(Self { factor, clipped })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * z).iter().copied().collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("grid must be nonempty, finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid must be strictly increasing"));
    }
    Ok(())
}

fn replicate_paths<F>(replicates: u64, seed: u64, draw: F) -> Vec<ProcessSample>
where
    F: Fn(&mut StreamRng, u64) -> ProcessSample + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            draw(&mut rng, r)
        })
        .collect()
}

/// Joint covariance of `(𝒢⁺(t_1..t_g), 𝒢⁻(t_1..t_g))`:
/// `C_{f,k} m(D_s^a ∩ D_t^b)`.
pub fn g_covariance(k: usize, grid: &[f64], density: &Density, table: &DVolumeTable) -> Result<DMatrix<f64>> {
    check_grid(grid)?;
    if table.k != k || table.d != density.dim() {
        return Err(invalid("volume table does not match k and the density dimension"));
    }
    let t_max = grid[grid.len() - 1];
    if t_max > table.radius {
        return Err(invalid(format!("grid reaches {t_max} beyond table radius {}", table.radius)));
    }
    let c = c_f_k(density, k)?;
    let g = grid.len();
    let sign = |i: usize| if i < g { Sign::Plus } else { Sign::Minus };
    Ok(DMatrix::from_fn(2 * g, 2 * g, |a, b| {
        let (s, t) = (grid[a % g], grid[b % g]);
        if s == 0.0 || t == 0.0 {
            0.0
        } else {
            c * table.cross_volume(sign(a), s, sign(b), t).value
        }
    }))
}

/// Paths of `𝒢_k` with its coupled `±` parts.
pub fn sample_g(
    k: usize,
    grid: &[f64],
    density: &Density,
    table: &DVolumeTable,
    replicates: u64,
    seed: u64,
) -> Result<ProcessEnsemble> {
    let cov = g_covariance(k, grid, density, table)?;
    let factor = GaussianFactor::new(&cov)?;
    let g = grid.len();
    let paths = replicate_paths(replicates, seed, |rng, replicate| {
        let x = factor.sample(rng);
        let (plus, minus) = (x[..g].to_vec(), x[g..].to_vec());
        let values = plus.iter().zip(&minus).map(|(p, m)| p - m).collect();
        ProcessSample { replicate, values, plus, minus }
    });
    Ok(ProcessEnsemble { tag: ProcessTag::G, grid: grid.to_vec(), seed, clipped_eigenvalues: factor.clipped, paths })
}

/// Paths of `ℋ^{(M)}` with covariance `Φ̂^{(M)}`.
pub fn sample_h_truncated(phi: &LimitCovariance, replicates: u64, seed: u64) -> Result<ProcessEnsemble> {
    check_grid(&phi.grid)?;
    let g = phi.grid.len();
    let cov = DMatrix::from_fn(g, g, |a, b| phi.values[a][b]);
    let factor = GaussianFactor::new(&cov)?;
    let paths = replicate_paths(replicates, seed, |rng, replicate| ProcessSample {
        replicate,
        values: factor.sample(rng),
        plus: Vec::new(),
        minus: Vec::new(),
    });
    Ok(ProcessEnsemble { tag: ProcessTag::H, grid: phi.grid.clone(), seed, clipped_eigenvalues: factor.clipped, paths })
}

/// Evaluates `V^±` and `V` on the grid from the atoms' `(τ⁺, τ⁻)`.
pub fn v_path_from_atoms(atoms: &[(f64, f64)], grid: &[f64], replicate: u64) -> ProcessSample {
    let count = |f: &dyn Fn(&(f64, f64)) -> bool| atoms.iter().filter(|a| f(a)).count() as f64;
    let plus: Vec<f64> = grid.iter().map(|&t| count(&|a| a.0 <= t)).collect();
    let minus: Vec<f64> = grid.iter().map(|&t| count(&|a| a.1 <= t)).collect();
    let values = plus.iter().zip(&minus).map(|(p, m)| p - m).collect();
    ProcessSample { replicate, values, plus, minus }
}

/// Mean atom count of the Poisson random measure on `B(0, t_max)^{k+1}`.
pub fn v_atom_mean(k: usize, density: &Density, t_max: f64) -> Result<f64> {
    let d = density.dim();
    Ok(c_f_k(density, k)? * (unit_ball_volume(d) * t_max.powi(d as i32)).powi(k as i32 + 1))
}

/// Paths of `𝒱_k` from a Poisson random measure with mean `C_{f,k} m`.
pub fn sample_v(k: usize, grid: &[f64], density: &Density, replicates: u64, seed: u64) -> Result<ProcessEnsemble> {
    check_grid(grid)?;
    let d = density.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    let t_max = grid[grid.len() - 1];
    let mean = v_atom_mean(k, density, t_max)?;
    let paths = replicate_paths(replicates, seed, |rng, replicate| {
        let atoms = if mean > 0.0 {
            use rand_distr::{Distribution, Poisson};
            let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
            let origin = vec![0.0; d];
            let mut pts = vec![0.0; d * (k + 2)];
            (0..n)
                .map(|_| {
                    for p in 1..k + 2 {
                        sample_in_ball(rng, &origin, t_max, &mut pts[p * d..(p + 1) * d]);
                    }
                    let refs: Vec<&[f64]> = pts.chunks_exact(d).collect();
                    empty_simplex_times(&refs)
                })
                .collect()
        } else {
            Vec::new()
        };
        v_path_from_atoms(&atoms, grid, replicate)
    });
    Ok(ProcessEnsemble { tag: ProcessTag::V, grid: grid.to_vec(), seed, clipped_eigenvalues: 0, paths })
}
