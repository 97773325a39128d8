//! Regime runs and checks on small configurations.

use cech_betti::experiments::stats::{poisson_chi_square, two_sample_chi_square};
use cech_betti::experiments::{
    check_connectivity_bound, check_critical, compute_constants, connection_probability, run_experiment, run_regime,
    RegimeConfig, RegimeConstants,
};
use cech_betti::cechcore::h;
use cech_betti::limit_constants::mu;
use cech_betti::pointproc::Density;
use cech_betti::rng::stream_rng;
use rand::Rng;
use rand_distr::Distribution;
use serde_json::json;

fn config(v: serde_json::Value) -> RegimeConfig {
    serde_json::from_value(v).unwrap()
}

fn uniform2() -> serde_json::Value {
    json!({"kind": "uniform-cube", "d": 2})
}

#[test]
fn single_replicate_leaves_second_moments_absent() {
    let c = config(json!({
        "regime": "sparse", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [256, 512], "grid": [0.5, 1.0], "replicates": 1, "seed": 3,
        "budgets": {"dvolume_samples": 20000}
    }));
    let report = run_experiment(&c).unwrap();
    for ns in &report.summary.per_n {
        assert!(ns.beta_covariance.is_none());
        assert!(ns.beta.iter().all(|b| b.std_error.is_none() && b.variance.is_none()));
    }
    let sparse = &report.checks[0];
    assert!(sparse.notices.iter().any(|n| n.contains("variance absent")));
}

#[test]
fn standard_error_shrinks_like_root_replicates() {
    let base = json!({
        "regime": "critical", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [400], "grid": [0.3], "seed": 5
    });
    let se = |reps: u64| {
        let mut v = base.clone();
        v["replicates"] = json!(reps);
        run_regime(&config(v)).unwrap().per_n[0].beta[0].std_error.unwrap()
    };
    let ratio = se(800) / se(400);
    assert!((0.6..=0.85).contains(&ratio), "ratio {ratio}");
}

fn sparse_4096() -> RegimeConfig {
    config(json!({
        "regime": "sparse", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [4096], "gamma": 0.65, "grid": [1.0], "replicates": 1000, "seed": 11
    }))
}

/// `ρ^{-1} E S(1)` for the unit square at finite `n`, ignoring the boundary:
/// hollow triangles weighted by the chance that no further point lies within
/// unit t-distance of a vertex. `lambda` is `n s^d`.
fn isolated_triangle_rate(lambda: f64, samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, 0);
    let disk = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let p = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            return p;
        }
    };
    let mut hits = 0u64;
    for _ in 0..samples {
        let (y1, y2) = (disk(&mut rng), disk(&mut rng));
        let verts = [[0.0, 0.0], y1, y2];
        let pts: Vec<&[f64]> = verts.iter().map(|v| v.as_slice()).collect();
        if h(&pts, 1, 1.0).unwrap() == 0 {
            continue;
        }
        // Poisson(lambda) points on a box holding the unit disks of all vertices
        let lo = [verts.iter().map(|v| v[0]).fold(f64::MAX, f64::min) - 1.0, verts.iter().map(|v| v[1]).fold(f64::MAX, f64::min) - 1.0];
        let hi = [verts.iter().map(|v| v[0]).fold(f64::MIN, f64::max) + 1.0, verts.iter().map(|v| v[1]).fold(f64::MIN, f64::max) + 1.0];
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let count = rand_distr::Poisson::new(lambda * area).unwrap().sample(&mut rng) as u64;
        let isolated = (0..count).all(|_| {
            let z = [lo[0] + rng.random::<f64>() * (hi[0] - lo[0]), lo[1] + rng.random::<f64>() * (hi[1] - lo[1])];
            verts.iter().all(|v| (z[0] - v[0]).hypot(z[1] - v[1]) > 1.0)
        });
        hits += u64::from(isolated);
    }
    let p = hits as f64 / samples as f64;
    let c = std::f64::consts::PI.powi(2) / 6.0;
    (c * p, c * (p * (1.0 - p) / samples as f64).sqrt())
}

#[test]
fn sparse_counts_match_finite_n_and_limit_constants() {
    let summary = run_regime(&sparse_4096()).unwrap();
    let ns = &summary.per_n[0];
    assert_eq!(ns.identity_violations, 0);
    let f = Density::uniform_cube(2, 1.0).unwrap();
    let limit = mu(1, None, 1.0, 1.0, &f, 1_000_000, 12).unwrap().value;
    let beta = ns.beta[0].mean / ns.rho;
    assert!((beta - limit).abs() <= 0.15 * limit, "beta: {beta} vs {limit}");
    let (finite, _) = isolated_triangle_rate(ns.n_scale_d, 400_000, 13);
    let s = ns.s[0].mean / ns.rho;
    assert!((s - finite).abs() <= 0.15 * finite, "S: {s} vs {finite}");
    // isolation must cost a visible share at this n
    assert!(finite < 0.8 * limit);
}

/// The limit statement itself: at n = 2^12 the isolation factor is still
/// about 0.62, so this fails until n is roughly 10^5.
#[test]
#[ignore = "S/rho converges to mu only once n s^d is near zero; about 0.62 mu at n = 4096"]
fn sparse_isolated_triangles_reach_mu_at_4096() {
    let summary = run_regime(&sparse_4096()).unwrap();
    let ns = &summary.per_n[0];
    let f = Density::uniform_cube(2, 1.0).unwrap();
    let reference = mu(1, None, 1.0, 1.0, &f, 1_000_000, 12).unwrap().value;
    let observed = ns.s[0].mean / ns.rho;
    assert!((observed - reference).abs() <= 0.15 * reference, "{observed} vs {reference}");
}

fn poisson_config() -> RegimeConfig {
    config(json!({
        "regime": "poisson", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [300], "grid": [0.8, 1.2], "replicates": 60, "seed": 17,
        "budgets": {"dvolume_samples": 20000, "limit_replicates": 200},
        "connectivity": {"sizes": [2, 3], "radii": [0.1], "replicates": 5000},
        "limit_process": {"t_max": 1.0, "intervals": 2, "replicates": 200}
    }))
}

#[test]
fn reports_do_not_depend_on_the_thread_count() {
    let c = poisson_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let report = pool.install(|| run_experiment(&c)).unwrap();
        let mut csv = Vec::new();
        report.summary.write_csv(&mut csv).unwrap();
        (serde_json::to_string(&report).unwrap(), csv)
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn poisson_rate_scales_exactly() {
    let report = run_experiment(&poisson_config()).unwrap();
    let poisson = report.checks.iter().find(|c| c.check == "poisson").unwrap();
    let scaling: Vec<_> = poisson.items.iter().filter(|i| i.rule == "exact").collect();
    assert_eq!(scaling.len(), 2);
    assert!(scaling.iter().all(|i| i.passed && i.observed == 16.0));
    let RegimeConstants::Poisson(pc) = &report.constants else { panic!("wrong constants") };
    assert!((pc.lambda[1] / pc.lambda[0] - 1.5f64.powi(4)).abs() < 1e-12);
}

#[test]
fn critical_checks_beyond_the_bound_are_suppressed() {
    let c = config(json!({
        "regime": "critical", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [200, 400], "grid": [0.2, 0.6], "replicates": 40, "seed": 23,
        "budgets": {"eta_samples": 20000, "nu_samples": 20000}
    }));
    let summary = run_regime(&c).unwrap();
    let RegimeConstants::Critical(constants) = compute_constants(&c).unwrap() else { panic!("wrong constants") };
    // (e π)^{-1/2} for the unit square
    assert!((constants.clt_bound - (std::f64::consts::E * std::f64::consts::PI).powf(-0.5)).abs() < 1e-12);
    let report = check_critical(&summary, &constants, &c, None);
    assert!(report.notices.iter().any(|n| n.starts_with("t=0.6: CLT diagnostics suppressed")));
    assert!(!report.notices.iter().any(|n| n.starts_with("t=0.2: CLT")));
    let var_at = |t: f64| report.items.iter().any(|i| i.name.starts_with("n^-1 var") && i.t == Some(t));
    assert!(var_at(0.2));
    assert!(!var_at(0.6));
    // mean and strong-law checks still run at the suppressed point
    assert!(report.items.iter().any(|i| i.name.starts_with("n^-1 mean(U") && i.t == Some(0.6)));
    assert!(report.items.iter().any(|i| i.name.starts_with("rms deviation") && i.t == Some(0.6)));
}

#[test]
fn two_point_connection_matches_the_exact_probability() {
    let f = Density::uniform_cube(2, 1.0).unwrap();
    for r in [0.05, 0.2] {
        let (p, se) = connection_probability(&f, 2, r, 200_000, 31).unwrap();
        // P(|X - Y| <= r) for independent uniform points of the unit square
        let exact = std::f64::consts::PI * r * r - 8.0 / 3.0 * r.powi(3) + 0.5 * r.powi(4);
        assert!((p - exact).abs() <= 4.0 * se, "r={r}: {p} vs {exact}");
    }
}

#[test]
fn connectivity_bound_holds_for_small_groups() {
    let f = Density::uniform_cube(2, 1.0).unwrap();
    let report = check_connectivity_bound(&f, &[2, 4], &[0.05], 100_000, 3.0, 37).unwrap();
    assert_eq!(report.items.len(), 2);
    assert!(report.passed(), "{report:?}");
    assert!(report.notices.is_empty());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = json!({
        "regime": "sparse", "d": 2, "k": 1, "density": uniform2(),
        "n_list": [100], "grid": [1.0], "replicates": 2, "seed": 0
    });
    let with = |key: &str, value: serde_json::Value| {
        let mut v = base.clone();
        v[key] = value;
        run_regime(&config(v)).is_err()
    };
    assert!(with("gamma", json!(0.8)));
    assert!(with("gamma", json!(0.5)));
    assert!(with("grid", json!([1.0, 0.5])));
    assert!(with("grid", json!([0.0])));
    assert!(with("k", json!(2)));
    assert!(with("truncation", json!(2)));
    assert!(with("replicates", json!(0)));
    assert!(with("n_list", json!([])));
    let mut v = base.clone();
    v["regime"] = json!("critical");
    v["gamma"] = json!(0.6);
    assert!(run_regime(&config(v)).is_err());
    let mut v = base.clone();
    v["surplus"] = json!(1);
    assert!(serde_json::from_value::<RegimeConfig>(v).is_err());
}

#[test]
fn chi_square_helpers_separate_matching_and_shifted_laws() {
    let counts: Vec<u64> = (0..4000u64).map(|i| [0, 1, 1, 2, 3][(i % 5) as usize]).collect();
    let fit = poisson_chi_square(&counts, 1.4, 5.0);
    assert!(fit.cells.iter().all(|c| c.2 >= 5.0));
    assert_eq!(fit.cells.iter().map(|c| c.1).sum::<f64>(), 4000.0);
    let shifted: Vec<u64> = counts.iter().map(|c| c + 3).collect();
    assert!(two_sample_chi_square(&counts, &shifted, 5.0).p_value < 1e-9);
    let same = two_sample_chi_square(&counts, &counts, 5.0);
    assert_eq!(same.statistic, 0.0);
    assert_eq!(same.p_value, 1.0);
}
