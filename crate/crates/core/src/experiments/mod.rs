//! Regime harness: radius schedules, replicated simulation of `β_{k,n}` and
//! the component census, aggregation, and the limit-theorem checks.
//!
//! Replicate `r` of the `i`-th entry of the n-list draws from stream `r` of
//! `derive_seed(seed, i)`. Replicates run in parallel and are folded in index
//! order, so summaries are bit-identical for any thread count.

mod checks;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betti_process::{betti_curve_with_budget, census, lifetime_sum, truncated_betti};
use crate::error::{invalid, Error, Result};
use crate::limit_constants::CriticalOptions;
use crate::pointproc::{sample_poisson_process, unit_ball_volume, Density, DensitySpec};
use crate::rng::{derive_seed, stream_rng};

pub use checks::{
    check_connectivity_bound, check_critical, check_limit_processes, check_poisson, check_sparse_clt,
    compute_constants, connection_probability, run_experiment, CheckItem, CheckReport, ClassConstant,
    CriticalConstants, ExperimentReport, PoissonConstants, RegimeConstants, SparseConstants,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sparse,
    Critical,
    Poisson,
}

/// Thresholds of every check; all live in the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sparse_mean_rel: f64,
    pub sparse_var_rel: f64,
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
    pub critical_class_rel: f64,
    pub critical_var_rel: f64,
    /// Classes `(i, j)` whose mean check counts toward acceptance; empty
    /// means `(k+2, 1)` only.
    pub acceptance_classes: Vec<(usize, usize)>,
    pub poisson_mean_rel: f64,
    pub chi_square_min_p: f64,
    pub chi_square_min_expected: f64,
    pub std_errors: f64,
    pub dispersion_range: (f64, f64),
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sparse_mean_rel: 0.15,
            sparse_var_rel: 0.15,
            max_abs_skewness: 0.25,
            max_abs_excess_kurtosis: 0.5,
            critical_class_rel: 0.10,
            critical_var_rel: 0.20,
            acceptance_classes: Vec::new(),
            poisson_mean_rel: 0.10,
            chi_square_min_p: 0.01,
            chi_square_min_expected: 5.0,
            std_errors: 3.0,
            dispersion_range: (0.85, 1.15),
        }
    }
}

/// Monte Carlo budgets for the reference constants and limit simulations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub dvolume_samples: u64,
    pub eta_samples: u64,
    pub nu_samples: u64,
    pub limit_replicates: u64,
    pub simplex_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            dvolume_samples: 1_000_000,
            eta_samples: 1_000_000,
            nu_samples: 1_000_000,
            limit_replicates: 2000,
            simplex_budget: crate::cechcore::DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

/// Connection-probability checks run alongside a regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectivityConfig {
    pub sizes: Vec<usize>,
    pub radii: Vec<f64>,
    pub replicates: u64,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self { sizes: vec![2, 3, 4, 5], radii: vec![0.05, 0.2], replicates: 200_000 }
    }
}

/// Limit-process simulator checks (Gaussian variance law, Poisson time change).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitProcessConfig {
    pub t_max: f64,
    /// Intervals of equal `t^{d(k+1)}` length for the dispersion check.
    pub intervals: usize,
    pub replicates: u64,
}

impl Default for LimitProcessConfig {
    fn default() -> Self {
        Self { t_max: 1.2, intervals: 4, replicates: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub regime: Regime,
    pub d: usize,
    pub k: usize,
    pub density: DensitySpec,
    pub n_list: Vec<f64>,
    /// Sparse schedule `s_n = n^{-γ}`.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub grid: Vec<f64>,
    pub replicates: u64,
    /// Overrides `replicates` per entry of the n-list.
    #[serde(default)]
    pub replicates_per_n: Option<Vec<u64>>,
    /// Truncation level `M` of `β^{(M)}`.
    #[serde(default)]
    pub truncation: Option<usize>,
    pub seed: u64,
    #[serde(default = "yes")]
    pub clt_checks: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub estimator: CriticalOptions,
    #[serde(default)]
    pub connectivity: Option<ConnectivityConfig>,
    #[serde(default)]
    pub limit_process: Option<LimitProcessConfig>,
}

fn yes() -> bool {
    true
}

impl RegimeConfig {
    /// Fills every optional field with its default.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.regime == Regime::Sparse && c.gamma.is_none() {
            c.gamma = Some(if c.d == 2 && c.k == 1 {
                0.65
            } else {
                let (lo, hi) = sparse_gamma_range(c.d, c.k);
                0.5 * (lo + hi)
            });
        }
        if c.replicates_per_n.is_none() {
            c.replicates_per_n = Some(vec![c.replicates; c.n_list.len()]);
        }
        if c.truncation.is_none() {
            c.truncation = Some(c.k + 2);
        }
        if c.tolerances.acceptance_classes.is_empty() {
            c.tolerances.acceptance_classes = vec![(c.k + 2, 1)];
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k >= self.d {
            return Err(Error::DegreeOutOfRange { k: self.k, d: self.d });
        }
        let density = Density::from_spec(&self.density)?;
        if density.dim() != self.d {
            return Err(invalid("density dimension differs from d"));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|n| !(*n > 0.0) || !n.is_finite()) {
            return Err(invalid("n-list must be nonempty and positive"));
        }
        if self.grid.is_empty() || self.grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(invalid("t-grid must be nonempty and nonnegative"));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("t-grid must be strictly increasing"));
        }
        if !self.grid.iter().any(|t| *t > 0.0) {
            return Err(invalid("t-grid needs a positive point"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates must be positive"));
        }
        if let Some(per) = &self.replicates_per_n {
            if per.len() != self.n_list.len() || per.contains(&0) {
                return Err(invalid("replicates_per_n must give a positive count per n"));
            }
        }
        if let Some(m) = self.truncation {
            if m < self.k + 2 {
                return Err(invalid("truncation must be at least k + 2"));
            }
        }
        if self.regime == Regime::Sparse {
            let (lo, hi) = sparse_gamma_range(self.d, self.k);
            if let Some(g) = self.gamma {
                if !(g > lo && g < hi) {
                    return Err(invalid(format!(
                        "sparse exponent {g} outside ({lo}, {hi}): need n s_n^d -> 0 and rho_n -> infinity"
                    )));
                }
            }
        } else if self.gamma.is_some() {
            return Err(invalid("gamma applies to the sparse regime only"));
        }
        Ok(())
    }

    pub fn replicates_for(&self, index: usize) -> u64 {
        self.replicates_per_n.as_ref().map_or(self.replicates, |r| r[index])
    }

    /// `s_n` of the configured schedule.
    pub fn scale(&self, n: f64) -> f64 {
        let (d, k) = (self.d as f64, self.k as f64);
        match self.regime {
            Regime::Sparse => n.powf(-self.gamma.expect("resolved config")),
            Regime::Critical => n.powf(-1.0 / d),
            Regime::Poisson => n.powf(-(k + 2.0) / (d * (k + 1.0))),
        }
    }

    /// `ρ_n = n^{k+2} s_n^{d(k+1)}`.
    pub fn rho(&self, n: f64) -> f64 {
        let s = self.scale(n);
        n.powi(self.k as i32 + 2) * s.powi((self.d * (self.k + 1)) as i32)
    }

    pub fn t_max(&self) -> f64 {
        self.grid.iter().cloned().fold(0.0, f64::max)
    }
}

/// Open interval of sparse exponents with `n s_n^d -> 0` and `ρ_n -> ∞`.
pub fn sparse_gamma_range(d: usize, k: usize) -> (f64, f64) {
    (1.0 / d as f64, (k + 2) as f64 / (d * (k + 1)) as f64)
}

/// `(e ‖f‖_∞ θ_d)^{-1/d}`: the critical-regime CLT holds below this radius.
pub fn critical_clt_bound(density: &Density) -> f64 {
    let d = density.dim();
    (std::f64::consts::E * density.sup_norm() * unit_ball_volume(d)).powf(-1.0 / d as f64)
}

/// Mean over replicates with diagnostics; absent entries need two replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let m = stats::moments(xs);
        Stat {
            mean: m.mean,
            std_error: m.variance.map(|v| (v / xs.len() as f64).sqrt()),
            variance: m.variance,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStat {
    pub i: usize,
    pub j: usize,
    /// Mean of `U_{i,j}` per grid point.
    pub mean: Vec<f64>,
}

/// Aggregates for one intensity `n`; vectors run over the t-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: f64,
    pub scale: f64,
    pub rho: f64,
    pub n_scale_d: f64,
    pub replicates: u64,
    pub beta: Vec<Stat>,
    pub beta_covariance: Option<Vec<Vec<f64>>>,
    pub s: Vec<Stat>,
    pub r: Vec<Stat>,
    pub truncated: Vec<Stat>,
    pub truncated_covariance: Option<Vec<Vec<f64>>>,
    pub lifetime: Vec<Stat>,
    pub classes: Vec<ClassStat>,
    /// Replicate-major `β_{k,n}(t)` values.
    pub beta_samples: Vec<Vec<u64>>,
    pub truncated_samples: Vec<Vec<u64>>,
    /// Grid points where the curve disagreed with `Σ j U_{i,j}`.
    pub identity_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub d: usize,
    pub k: usize,
    pub grid: Vec<f64>,
    pub truncation: usize,
    pub per_n: Vec<NSummary>,
}

impl RegimeSummary {
    pub fn largest(&self) -> &NSummary {
        self.per_n
            .iter()
            .max_by(|a, b| a.n.total_cmp(&b.n))
            .expect("summary covers at least one n")
    }

    /// Per-t statistics as CSV, one row per (n, t).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# regime={:?} d={} k={} truncation={}", self.regime, self.d, self.k, self.truncation)?;
        writeln!(
            w,
            "n,t,replicates,rho,beta_mean,beta_var,beta_skewness,beta_excess_kurtosis,s_mean,r_mean,truncated_mean,truncated_var,lifetime_mean"
        )?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for ns in &self.per_n {
            for (g, t) in self.grid.iter().enumerate() {
                let b = &ns.beta[g];
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    ns.n,
                    t,
                    ns.replicates,
                    ns.rho,
                    b.mean,
                    opt(b.variance),
                    opt(b.skewness),
                    opt(b.excess_kurtosis),
                    ns.s[g].mean,
                    ns.r[g].mean,
                    ns.truncated[g].mean,
                    opt(ns.truncated[g].variance),
                    ns.lifetime[g].mean
                )?;
            }
        }
        Ok(())
    }
}

struct ReplicateRecord {
    beta: Vec<u64>,
    s: Vec<u64>,
    r: Vec<u64>,
    truncated: Vec<u64>,
    lifetime: Vec<f64>,
    classes: Vec<std::collections::BTreeMap<(usize, usize), u64>>,
    violations: u64,
}

fn simulate_replicate(config: &RegimeConfig, density: &Density, n: f64, seed: u64, r: u64) -> Result<ReplicateRecord> {
    let k = config.k;
    let m = config.truncation.expect("resolved config");
    let scale = config.scale(n);
    let mut rng = stream_rng(seed, r);
    let cloud = sample_poisson_process(density, n, scale, &mut rng)?;
    let curve = betti_curve_with_budget(&cloud, k, config.t_max(), config.budgets.simplex_budget)?;
    let g = config.grid.len();
    let mut rec = ReplicateRecord {
        beta: Vec::with_capacity(g),
        s: Vec::with_capacity(g),
        r: Vec::with_capacity(g),
        truncated: Vec::with_capacity(g),
        lifetime: Vec::with_capacity(g),
        classes: Vec::with_capacity(g),
        violations: 0,
    };
    for &t in &config.grid {
        let c = census(&cloud, k, t)?;
        let beta = curve.value_at(t) as u64;
        if beta != c.betti() {
            rec.violations += 1;
        }
        rec.beta.push(beta);
        rec.s.push(c.s());
        rec.r.push(c.r());
        rec.truncated.push(truncated_betti(&c, m));
        rec.lifetime.push(lifetime_sum(&curve, t));
        rec.classes.push(c.counts.into_iter().filter(|((i, _), _)| *i <= m).collect());
    }
    Ok(rec)
}

fn column<T: Copy + Into<f64>>(rows: &[Vec<T>], g: usize) -> Vec<f64> {
    rows.iter().map(|r| r[g].into()).collect()
}

fn as_f64(rows: &[Vec<u64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect()
}

fn summarize(config: &RegimeConfig, n: f64, records: Vec<ReplicateRecord>) -> NSummary {
    let g = config.grid.len();
    let beta: Vec<Vec<u64>> = records.iter().map(|r| r.beta.clone()).collect();
    let trunc: Vec<Vec<u64>> = records.iter().map(|r| r.truncated.clone()).collect();
    let per_t = |rows: Vec<Vec<f64>>| (0..g).map(|i| Stat::of(&column(&rows, i))).collect::<Vec<_>>();
    let f = |pick: fn(&ReplicateRecord) -> &Vec<u64>| as_f64(&records.iter().map(|r| pick(r).clone()).collect::<Vec<_>>());
    let mut keys: Vec<(usize, usize)> =
        records.iter().flat_map(|r| r.classes.iter().flat_map(|c| c.keys().copied())).collect();
    keys.sort_unstable();
    keys.dedup();
    let reps = records.len() as f64;
    let classes = keys
        .into_iter()
        .map(|(i, j)| ClassStat {
            i,
            j,
            mean: (0..g)
                .map(|t| records.iter().map(|r| r.classes[t].get(&(i, j)).copied().unwrap_or(0) as f64).sum::<f64>() / reps)
                .collect(),
        })
        .collect();
    let scale = config.scale(n);
    NSummary {
        n,
        scale,
        rho: config.rho(n),
        n_scale_d: n * scale.powi(config.d as i32),
        replicates: records.len() as u64,
        beta: per_t(as_f64(&beta)),
        beta_covariance: stats::covariance(&as_f64(&beta)),
        s: per_t(f(|r| &r.s)),
        r: per_t(f(|r| &r.r)),
        truncated: per_t(as_f64(&trunc)),
        truncated_covariance: stats::covariance(&as_f64(&trunc)),
        lifetime: per_t(records.iter().map(|r| r.lifetime.clone()).collect()),
        classes,
        identity_violations: records.iter().map(|r| r.violations).sum(),
        beta_samples: beta,
        truncated_samples: trunc,
    }
}

/// Runs every replicate for every `n` and aggregates.
pub fn run_regime(config: &RegimeConfig) -> Result<RegimeSummary> {
    config.validate()?;
    let config = config.resolved();
    let density = Density::from_spec(&config.density)?;
    let per_n = config
        .n_list
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let seed = derive_seed(config.seed, idx as u64);
            let records = (0..config.replicates_for(idx))
                .into_par_iter()
                .map(|r| {
                    simulate_replicate(&config, &density, n, seed, r)
                        .map_err(|e| Error::Replicate { n, replicate: r, source: Box::new(e) })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(&config, n, records))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegimeSummary {
        regime: config.regime,
        d: config.d,
        k: config.k,
        grid: config.grid.clone(),
        truncation: config.truncation.expect("resolved config"),
        per_n,
    })
}
