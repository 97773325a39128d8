//! Reference constants and the per-regime limit-theorem checks.

use serde::{Deserialize, Serialize};

use super::stats::{moments, poisson_chi_square, two_sample_chi_square, ChiSquareResult};
use super::{
    critical_clt_bound, run_regime, LimitProcessConfig, NSummary, Regime, RegimeConfig, RegimeSummary, Tolerances,
};
use crate::error::{invalid, Result};
use crate::limit_constants::{
    connection_threshold, eta_grid, mu_matrix, phi_truncated, volume_d1, DVolumeTable, LimitCovariance, McEstimate,
    Sign, Weighting,
};
use crate::limit_process::{sample_g, sample_h_truncated, sample_v, ProcessEnsemble};
use crate::pointproc::{c_f_k, factorial, unit_ball_volume, Density};
use crate::rng::derive_seed;

/// One compared quantity. `acceptance` items decide the overall verdict;
/// the others are diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub n: Option<f64>,
    pub t: Option<f64>,
    pub observed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub rule: String,
    pub passed: bool,
    pub acceptance: bool,
}

impl CheckItem {
    fn new(name: &str, observed: f64, reference: f64, tolerance: f64, rule: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            n: None,
            t: None,
            observed,
            reference,
            tolerance,
            rule: rule.to_string(),
            passed,
            acceptance: true,
        }
    }

    /// `|observed - reference| <= tolerance · |reference|`.
    pub fn relative(name: &str, observed: f64, reference: f64, tolerance: f64) -> Self {
        let passed = (observed - reference).abs() <= tolerance * reference.abs();
        Self::new(name, observed, reference, tolerance, "relative", passed)
    }

    /// `observed <= reference + tolerance`.
    pub fn at_most(name: &str, observed: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, observed, reference, tolerance, "at_most", observed <= reference + tolerance)
    }

    /// `|observed| <= tolerance`.
    pub fn bounded(name: &str, observed: f64, tolerance: f64) -> Self {
        Self::new(name, observed, 0.0, tolerance, "abs_at_most", observed.abs() <= tolerance)
    }

    /// `|observed - reference| <= tolerance` (an absolute band, e.g. in std errors).
    pub fn within(name: &str, observed: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, observed, reference, tolerance, "within", (observed - reference).abs() <= tolerance)
    }

    pub fn range(name: &str, observed: f64, lo: f64, hi: f64) -> Self {
        let mut item = Self::new(name, observed, 0.5 * (lo + hi), 0.5 * (hi - lo), "range", observed >= lo && observed <= hi);
        item.passed &= observed.is_finite();
        item
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Self::new(name, f64::from(u8::from(passed)), 1.0, 0.0, "flag", passed)
    }

    pub fn at(mut self, n: Option<f64>, t: Option<f64>) -> Self {
        self.n = n;
        self.t = t;
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.acceptance = false;
        self
    }

    fn accept_if(mut self, acceptance: bool) -> Self {
        self.acceptance = acceptance;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub items: Vec<CheckItem>,
    pub notices: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chi_square: Vec<(f64, ChiSquareResult)>,
}

impl CheckReport {
    fn new(check: &str) -> Self {
        Self { check: check.to_string(), items: Vec::new(), notices: Vec::new(), chi_square: Vec::new() }
    }

    /// All acceptance items passed.
    pub fn passed(&self) -> bool {
        self.items.iter().filter(|i| i.acceptance).all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&CheckItem> {
        self.items.iter().filter(|i| i.acceptance && !i.passed).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseConstants {
    pub mu: LimitCovariance,
}

/// `η̂^{(i,j,j)}(t,t)/i!` per grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassConstant {
    pub i: usize,
    pub j: usize,
    pub per_t: Vec<McEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub classes: Vec<ClassConstant>,
    /// `Σ_{i <= M} Σ_j (j/i!) η̂^{(i,j,j)}(t,t)` per grid point.
    pub eta_sum: Vec<McEstimate>,
    pub phi: LimitCovariance,
    pub clt_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonConstants {
    pub c_f_k: f64,
    pub d_plus: McEstimate,
    pub d_minus: McEstimate,
    /// `λ̂(t) = C_{f,k}(m̂(D_1^+) − m̂(D_1^−)) t^{d(k+1)}` per grid point.
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum RegimeConstants {
    Sparse(SparseConstants),
    Critical(CriticalConstants),
    Poisson(PoissonConstants),
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Limit constants the checks of `config`'s regime compare against.
pub fn compute_constants(config: &RegimeConfig) -> Result<RegimeConstants> {
    let config = config.resolved();
    let density = Density::from_spec(&config.density)?;
    let (k, d) = (config.k, config.d);
    let b = &config.budgets;
    let seed = derive_seed(config.seed, 0xC0);
    Ok(match config.regime {
        Regime::Sparse => RegimeConstants::Sparse(SparseConstants {
            mu: mu_matrix(k, None, &config.grid, &density, b.dvolume_samples, seed)?,
        }),
        Regime::Critical => {
            let m = config.truncation.expect("resolved config");
            let g = config.grid.len();
            let mut classes = Vec::new();
            for i in k + 2..=m {
                for j in 1..=binomial(i, k + 1) {
                    let est = eta_grid(
                        k,
                        i,
                        &config.grid,
                        &density,
                        None,
                        Weighting::Classes { j1: j, j2: j },
                        &config.estimator,
                        b.eta_samples,
                        derive_seed(seed, (i * 1000 + j) as u64),
                    )?;
                    let per_t = (0..g).map(|a| est[a * g + a].scaled(1.0 / factorial(i))).collect();
                    classes.push(ClassConstant { i, j, per_t });
                }
            }
            let eta_sum = (0..g)
                .map(|a| {
                    let mut value = 0.0;
                    let mut var = 0.0;
                    for c in &classes {
                        value += c.j as f64 * c.per_t[a].value;
                        var += (c.j as f64 * c.per_t[a].std_error).powi(2);
                    }
                    McEstimate { value, std_error: var.sqrt(), samples: b.eta_samples, seed }
                })
                .collect();
            let phi = phi_truncated(
                m,
                k,
                &config.grid,
                &density,
                None,
                &config.estimator,
                b.eta_samples,
                b.nu_samples,
                derive_seed(seed, 1),
            )?;
            RegimeConstants::Critical(CriticalConstants { classes, eta_sum, phi, clt_bound: critical_clt_bound(&density) })
        }
        Regime::Poisson => {
            let table = DVolumeTable::sample(k, d, 1.0, b.dvolume_samples, seed)?;
            let d_plus = table.volume(Sign::Plus, 1.0);
            let d_minus = table.volume(Sign::Minus, 1.0);
            let c = c_f_k(&density, k)?;
            let lambda = config.grid.iter().map(|&t| poisson_rate(c, &d_plus, &d_minus, d, k, t)).collect();
            RegimeConstants::Poisson(PoissonConstants { c_f_k: c, d_plus, d_minus, lambda })
        }
    })
}

fn poisson_rate(c: f64, plus: &McEstimate, minus: &McEstimate, d: usize, k: usize, t: f64) -> f64 {
    c * (plus.value - minus.value) * t.powi((d * (k + 1)) as i32)
}

fn sorted_by_n(summary: &RegimeSummary) -> Vec<&NSummary> {
    let mut v: Vec<&NSummary> = summary.per_n.iter().collect();
    v.sort_by(|a, b| a.n.total_cmp(&b.n));
    v
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn moment_items(report: &mut CheckReport, ns: &NSummary, g: usize, t: f64, tol: &Tolerances, accept: bool) {
    let b = &ns.beta[g];
    let at = |i: CheckItem| i.at(Some(ns.n), Some(t)).accept_if(accept);
    match (b.skewness, b.excess_kurtosis) {
        (Some(s), Some(k)) => {
            report.items.push(at(CheckItem::bounded("standardized beta skewness", s, tol.max_abs_skewness)));
            report.items.push(at(CheckItem::bounded("standardized beta excess kurtosis", k, tol.max_abs_excess_kurtosis)));
        }
        _ => report.notices.push(format!("t={t}: beta is constant or R < 2, moments undefined")),
    }
}

/// Sparse regime: `ρ_n^{-1}` mean and covariance of `β` against `μ̂`,
/// negligibility of `R_{k,n}`, and moment diagnostics.
pub fn check_sparse_clt(summary: &RegimeSummary, constants: &SparseConstants, config: &RegimeConfig) -> CheckReport {
    let tol = &config.tolerances;
    let mut report = CheckReport::new("sparse_clt");
    let top = summary.largest();
    let grid = &summary.grid;
    for (g, &t) in grid.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let mu = constants.mu.values[g][g];
        let at = |i: CheckItem| i.at(Some(top.n), Some(t));
        report.items.push(at(CheckItem::relative("rho^-1 mean(beta) vs mu(t,t)", top.beta[g].mean / top.rho, mu, tol.sparse_mean_rel)));
        match top.beta[g].variance {
            Some(v) => report.items.push(at(CheckItem::relative("rho^-1 var(beta) vs mu(t,t)", v / top.rho, mu, tol.sparse_var_rel))),
            None => report.notices.push("single replicate: variance absent".into()),
        }
        if config.clt_checks {
            moment_items(&mut report, top, g, t, tol, true);
        }
        let ordered = sorted_by_n(summary);
        let r_scaled: Vec<f64> = ordered.iter().map(|ns| ns.r[g].mean / ns.rho).collect();
        report.items.push(
            CheckItem::flag("rho^-1 mean(R) strictly decreasing in n", strictly_decreasing(&r_scaled)).at(None, Some(t)),
        );
        let ratio: Vec<f64> = ordered.iter().map(|ns| ns.r[g].mean / ns.s[g].mean).collect();
        report.items.push(
            CheckItem::flag("mean(R)/mean(S) decreasing in n", strictly_decreasing(&ratio)).at(None, Some(t)).diagnostic(),
        );
        report.notices.push(format!("t={t}: rho^-1 mean(R) along n = {r_scaled:?}"));
    }
    if let Some(cov) = &top.beta_covariance {
        let symmetric = (0..grid.len()).all(|a| (0..grid.len()).all(|b| cov[a][b] == cov[b][a]));
        report.items.push(CheckItem::flag("empirical covariance symmetric", symmetric));
        for a in 0..grid.len() {
            for b in a + 1..grid.len() {
                if grid[a] > 0.0 && grid[b] > 0.0 {
                    report.items.push(
                        CheckItem::relative(
                            "rho^-1 cov(beta(ta), beta(tb)) vs mu(ta,tb)",
                            cov[a][b] / top.rho,
                            constants.mu.values[a][b],
                            tol.sparse_var_rel,
                        )
                        .at(Some(top.n), Some(grid[b]))
                        .diagnostic(),
                    );
                }
            }
        }
    }
    report
}

/// Critical regime: class means against `η̂/i!`, `n^{-1} var β^{(M)}` against
/// `Φ̂^{(M)}`, the strong-law trend, and the `ℋ^{(M)}` comparison.
pub fn check_critical(
    summary: &RegimeSummary,
    constants: &CriticalConstants,
    config: &RegimeConfig,
    h: Option<&ProcessEnsemble>,
) -> CheckReport {
    let config = config.resolved();
    let tol = &config.tolerances;
    let mut report = CheckReport::new("critical");
    let top = summary.largest();
    let ordered = sorted_by_n(summary);
    for (g, &t) in summary.grid.iter().enumerate() {
        let clt = config.clt_checks && t < constants.clt_bound;
        if !clt {
            report.notices.push(format!(
                "t={t}: CLT diagnostics suppressed (t >= {:.4} or disabled); mean and SLLN checks still run",
                constants.clt_bound
            ));
        }
        for c in &constants.classes {
            let observed =
                top.classes.iter().find(|s| s.i == c.i && s.j == c.j).map_or(0.0, |s| s.mean[g]) / top.n;
            let accept = tol.acceptance_classes.contains(&(c.i, c.j));
            report.items.push(
                CheckItem::relative(
                    &format!("n^-1 mean(U_{{{},{}}}) vs eta^({},{},{})/{}!", c.i, c.j, c.i, c.j, c.j, c.i),
                    observed,
                    c.per_t[g].value,
                    tol.critical_class_rel,
                )
                .at(Some(top.n), Some(t))
                .accept_if(accept),
            );
        }
        if clt {
            match top.truncated[g].variance {
                Some(v) => report.items.push(
                    CheckItem::relative(
                        "n^-1 var(beta^(M)) vs Phi^(M)(t,t)",
                        v / top.n,
                        constants.phi.values[g][g],
                        tol.critical_var_rel,
                    )
                    .at(Some(top.n), Some(t)),
                ),
                None => report.notices.push("single replicate: variance absent".into()),
            }
            moment_items(&mut report, top, g, t, tol, false);
            if let Some(h) = h {
                let eta = constants.eta_sum[g].value;
                let x: Vec<f64> =
                    top.truncated_samples.iter().map(|r| (r[g] as f64 - top.n * eta) / top.n.sqrt()).collect();
                let (mx, mh) = (moments(&x), moments(&h.column(g)));
                if let (Some(vx), Some(vh)) = (mx.variance, mh.variance) {
                    let se = (vx / x.len() as f64 + vh / h.paths.len() as f64).sqrt();
                    report.items.push(
                        CheckItem::within("standardized beta^(M) vs H^(M): location (std errors)", (mx.mean - mh.mean) / se, 0.0, tol.std_errors)
                            .at(Some(top.n), Some(t))
                            .diagnostic(),
                    );
                    report.items.push(
                        CheckItem::relative("standardized beta^(M) vs H^(M): variance", vx, vh, tol.critical_var_rel)
                            .at(Some(top.n), Some(t))
                            .diagnostic(),
                    );
                }
            }
        }
        let eta = constants.eta_sum[g].value;
        let deviation: Vec<f64> = ordered
            .iter()
            .map(|ns| {
                let sq: f64 = ns.beta_samples.iter().map(|r| (r[g] as f64 / ns.n - eta).powi(2)).sum();
                (sq / ns.beta_samples.len() as f64).sqrt()
            })
            .collect();
        report.items.push(
            CheckItem::flag("rms deviation of beta/n from the truncated eta sum decreasing in n", strictly_decreasing(&deviation))
                .at(None, Some(t)),
        );
        report.notices.push(format!("t={t}: rms deviation of beta/n along n = {deviation:?}, eta sum = {eta}"));
        let scaled: Vec<f64> = ordered.iter().map(|ns| ns.beta[g].mean / ns.n).collect();
        report.items.push(
            CheckItem::flag("n^-1 mean(beta) increasing in n", scaled.windows(2).all(|w| w[1] >= w[0]))
                .at(None, Some(t))
                .diagnostic(),
        );
    }
    report
}

/// Poisson regime: means and marginal laws of `β(t)` against `Poisson(λ̂(t))`,
/// the time-change identity, and the joint law against simulated `𝒱` paths.
pub fn check_poisson(
    summary: &RegimeSummary,
    constants: &PoissonConstants,
    config: &RegimeConfig,
    v: Option<&ProcessEnsemble>,
) -> CheckReport {
    let tol = &config.tolerances;
    let (d, k) = (summary.d, summary.k);
    let mut report = CheckReport::new("poisson");
    let top = summary.largest();
    for (g, &t) in summary.grid.iter().enumerate() {
        let lambda = constants.lambda[g];
        let at = |i: CheckItem| i.at(Some(top.n), Some(t));
        report.items.push(at(CheckItem::relative("mean(beta) vs lambda(t)", top.beta[g].mean, lambda, tol.poisson_mean_rel)));
        let counts: Vec<u64> = top.beta_samples.iter().map(|r| r[g]).collect();
        let chi = poisson_chi_square(&counts, lambda, tol.chi_square_min_expected);
        let mut item = at(CheckItem::new("chi-square p-value vs Poisson(lambda(t))", chi.p_value, tol.chi_square_min_p, 0.0, "at_least", chi.p_value > tol.chi_square_min_p));
        if chi.dof == 0 {
            report.notices.push(format!("t={t}: too few expected counts for a chi-square test"));
            item = item.diagnostic();
        }
        report.items.push(item);
        report.chi_square.push((t, chi));
        let doubled = poisson_rate(constants.c_f_k, &constants.d_plus, &constants.d_minus, d, k, 2.0 * t);
        let ratio = doubled / lambda;
        let exact = 2f64.powi((d * (k + 1)) as i32);
        report.items.push(at(CheckItem::new("lambda(2t)/lambda(t) = 2^(d(k+1))", ratio, exact, 0.0, "exact", ratio == exact)));
    }
    if let Some(v) = v {
        let a: Vec<Vec<i64>> = top.beta_samples.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
        let b: Vec<Vec<i64>> = v.paths.iter().map(|p| p.values.iter().map(|&x| x as i64).collect()).collect();
        let chi = two_sample_chi_square(&a, &b, 2.0 * tol.chi_square_min_expected);
        report.items.push(
            CheckItem::new("joint law of (beta(t_1..t_m)) vs V paths: p-value", chi.p_value, tol.chi_square_min_p, 0.0, "at_least", chi.p_value > tol.chi_square_min_p)
                .at(Some(top.n), None)
                .diagnostic(),
        );
    }
    report
}

/// Empirical probability that `i` i.i.d. points form a connected Čech
/// complex at radius `r`, with its binomial standard error.
pub fn connection_probability(density: &Density, i: usize, r: f64, replicates: u64, seed: u64) -> Result<(f64, f64)> {
    if i < 2 || replicates == 0 {
        return Err(invalid("need at least two points and one replicate"));
    }
    let d = density.dim();
    let est = crate::limit_constants::mc_vec(replicates, seed, 1, |rng, out| {
        let mut pts = vec![0.0; i * d];
        for p in pts.chunks_exact_mut(d) {
            density.sample_point(rng, None, p)?;
        }
        out[0] = f64::from(u8::from(connection_threshold(d, &pts) <= r));
        Ok(())
    })?[0];
    let p = est.value;
    Ok((p, (p * (1.0 - p) / replicates as f64).sqrt()))
}

/// `P(connected) <= i^{i-2} (r^d ‖f‖_∞ θ_d)^{i-1}` up to `z` standard errors.
pub fn check_connectivity_bound(
    density: &Density,
    sizes: &[usize],
    radii: &[f64],
    replicates: u64,
    z: f64,
    seed: u64,
) -> Result<CheckReport> {
    let d = density.dim();
    let mut report = CheckReport::new("connectivity_bound");
    for &i in sizes {
        for &r in radii {
            let tag = derive_seed(seed, (i as u64) << 32 ^ r.to_bits());
            let (p, se) = connection_probability(density, i, r, replicates, tag)?;
            let bound = (i as f64).powi(i as i32 - 2)
                * (r.powi(d as i32) * density.sup_norm() * unit_ball_volume(d)).powi(i as i32 - 1);
            if bound >= 1.0 {
                report.notices.push(format!("i={i}, r={r}: bound {bound} >= 1, check is vacuous"));
            }
            report.items.push(CheckItem::at_most(&format!("P(connected), i={i}, r={r}"), p, bound, z * se));
        }
    }
    Ok(report)
}

/// `Var 𝒢^±(t)` against `C_{f,k} m̂(D_1^±) t^{d(k+1)}` and the dispersion
/// of `𝒱⁺` increments over intervals of equal `t^{d(k+1)}` length.
pub fn check_limit_processes(
    k: usize,
    density: &Density,
    lp: &LimitProcessConfig,
    dvolume_samples: u64,
    tol: &Tolerances,
    seed: u64,
) -> Result<CheckReport> {
    let d = density.dim();
    let mut report = CheckReport::new("limit_processes");
    let power = (d * (k + 1)) as f64;
    let grid: Vec<f64> = (1..=lp.intervals).map(|j| lp.t_max * (j as f64 / lp.intervals as f64).powf(1.0 / power)).collect();
    let c = c_f_k(density, k)?;
    let table = DVolumeTable::sample(k, d, lp.t_max, dvolume_samples, derive_seed(seed, 1))?;
    let g_paths = sample_g(k, &grid, density, &table, lp.replicates, derive_seed(seed, 2))?;
    for (sign, name) in [(Sign::Plus, "+"), (Sign::Minus, "-")] {
        let oracle = volume_d1(k, d, sign, dvolume_samples, derive_seed(seed, 3 + (sign == Sign::Minus) as u64))?;
        for (g, &t) in grid.iter().enumerate() {
            let xs: Vec<f64> = g_paths
                .paths
                .iter()
                .map(|p| if sign == Sign::Plus { p.plus[g] } else { p.minus[g] })
                .collect();
            let m = moments(&xs);
            let var = m.variance.unwrap_or(f64::NAN);
            let scale = c * t.powf(power);
            let reference = scale * oracle.value;
            // sample variance of a Gaussian has std error var·sqrt(2/(R-1))
            let se = (var * var * 2.0 / (xs.len() as f64 - 1.0) + (scale * oracle.std_error).powi(2)).sqrt();
            report.items.push(
                CheckItem::within(&format!("Var G^{name}(t) vs C m(D_1^{name}) t^(d(k+1))"), var, reference, tol.std_errors * se)
                    .at(None, Some(t)),
            );
        }
    }
    let v = sample_v(k, &grid, density, lp.replicates, derive_seed(seed, 5))?;
    let (lo, hi) = tol.dispersion_range;
    for g in 0..grid.len() {
        let inc: Vec<f64> = v
            .paths
            .iter()
            .map(|p| p.plus[g] - if g == 0 { 0.0 } else { p.plus[g - 1] })
            .collect();
        let m = moments(&inc);
        let dispersion = m.variance.unwrap_or(f64::NAN) / m.mean;
        report.items.push(CheckItem::range("V+ increment index of dispersion", dispersion, lo, hi).at(None, Some(grid[g])));
    }
    report.notices.push(format!("equal t^(d(k+1)) grid: {grid:?}"));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RegimeConfig,
    pub summary: RegimeSummary,
    pub constants: RegimeConstants,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

/// Regime run, reference constants, and every configured check.
pub fn run_experiment(config: &RegimeConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let config = config.resolved();
    let density = Density::from_spec(&config.density)?;
    let summary = run_regime(&config)?;
    let constants = compute_constants(&config)?;
    let mut checks = Vec::new();
    let limit_seed = derive_seed(config.seed, 0x11);
    let reps = config.budgets.limit_replicates;
    match &constants {
        RegimeConstants::Sparse(c) => checks.push(check_sparse_clt(&summary, c, &config)),
        RegimeConstants::Critical(c) => {
            let h = sample_h_truncated(&c.phi, reps, limit_seed);
            let mut report = check_critical(&summary, c, &config, h.as_ref().ok());
            if let Err(e) = h {
                report.notices.push(format!("H^(M) not simulated: {e}"));
            }
            checks.push(report);
        }
        RegimeConstants::Poisson(c) => {
            let v = sample_v(config.k, &config.grid, &density, reps, limit_seed)?;
            checks.push(check_poisson(&summary, c, &config, Some(&v)));
        }
    }
    if let Some(conn) = &config.connectivity {
        checks.push(check_connectivity_bound(
            &density,
            &conn.sizes,
            &conn.radii,
            conn.replicates,
            config.tolerances.std_errors,
            derive_seed(config.seed, 0x12),
        )?);
    }
    if let Some(lp) = &config.limit_process {
        checks.push(check_limit_processes(
            config.k,
            &density,
            lp,
            config.budgets.dvolume_samples,
            &config.tolerances,
            derive_seed(config.seed, 0x13),
        )?);
    }
    let identity_ok = summary.per_n.iter().all(|ns| ns.identity_violations == 0);
    let mut internal = CheckReport::new("internal");
    internal.items.push(CheckItem::flag("betti curve equals census sum at every grid point", identity_ok));
    checks.push(internal);
    let passed = checks.iter().all(CheckReport::passed);
    Ok(ExperimentReport { config, summary, constants, checks, passed })
}
