//! Limit-process samplers against the variance and intensity laws they are
//! built to reproduce.

use cech_betti::experiments::stats::moments;
use cech_betti::limit_constants::{phi_truncated, volume_d, volume_d1, CriticalOptions, DVolumeTable, Sign};
use cech_betti::limit_process::{sample_g, sample_h_truncated, sample_v, GaussianFactor};
use cech_betti::pointproc::{c_f_k, Density};
use nalgebra::DMatrix;

fn uniform() -> Density {
    Density::uniform_cube(2, 1.0).unwrap()
}

/// Unbiased variance and its standard error under normality.
fn var_with_se(xs: &[f64]) -> (f64, f64) {
    let v = moments(xs).variance.unwrap();
    (v, v * (2.0 / (xs.len() as f64 - 1.0)).sqrt())
}

#[test]
fn g_parts_follow_the_variance_law() {
    let f = uniform();
    let c = c_f_k(&f, 1).unwrap();
    let grid = [0.5, 1.0];
    let table = DVolumeTable::sample(1, 2, 1.0, 400_000, 1).unwrap();
    let ens = sample_g(1, &grid, &f, &table, 4000, 2).unwrap();
    assert_eq!(ens.clipped_eigenvalues, 0);
    for sign in [Sign::Plus, Sign::Minus] {
        // reference from an independent volume estimate
        let m1 = volume_d1(1, 2, sign, 400_000, 3).unwrap();
        for (gi, &t) in grid.iter().enumerate() {
            let xs: Vec<f64> = ens
                .paths
                .iter()
                .map(|p| if sign == Sign::Plus { p.plus[gi] } else { p.minus[gi] })
                .collect();
            let (v, se) = var_with_se(&xs);
            let reference = c * m1.value * t.powi(4);
            let ref_se = c * m1.std_error * t.powi(4);
            assert!((v - reference).abs() <= 3.0 * se.hypot(ref_se), "{sign:?} t={t}: {v} vs {reference}");

            let mean = moments(&xs).mean;
            assert!(mean.abs() <= 4.0 * (v / xs.len() as f64).sqrt(), "{sign:?} t={t}: mean {mean}");
        }
    }
}

#[test]
fn g_variance_scales_like_brownian_time_change() {
    let f = uniform();
    let grid = [0.5, 1.0];
    let table = DVolumeTable::sample(1, 2, 1.0, 400_000, 11).unwrap();
    let ens = sample_g(1, &grid, &f, &table, 4000, 12).unwrap();
    for sign in [Sign::Plus, Sign::Minus] {
        let col = |g: usize| -> Vec<f64> {
            ens.paths.iter().map(|p| if sign == Sign::Plus { p.plus[g] } else { p.minus[g] }).collect()
        };
        let (v1, se1) = var_with_se(&col(0));
        let (v2, se2) = var_with_se(&col(1));
        let ratio = v2 / v1;
        let se = ratio * ((se1 / v1).powi(2) + (se2 / v2).powi(2)).sqrt();
        assert!((ratio - 16.0).abs() <= 3.0 * se, "{sign:?}: ratio {ratio} ± {se}");
    }
}

#[test]
fn v_paths_have_the_right_mean_and_are_monotone() {
    let f = uniform();
    let c = c_f_k(&f, 1).unwrap();
    let grid = [0.6, 0.9, 1.2];
    let ens = sample_v(1, &grid, &f, 4000, 21).unwrap();
    for p in &ens.paths {
        assert!(p.plus.windows(2).all(|w| w[0] <= w[1]));
        assert!(p.minus.windows(2).all(|w| w[0] <= w[1]));
        for g in 0..grid.len() {
            assert_eq!(p.values[g], p.plus[g] - p.minus[g]);
        }
    }
    for (g, &t) in grid.iter().enumerate() {
        let xs = ens.column(g);
        let m = moments(&xs);
        let se = (m.variance.unwrap() / xs.len() as f64).sqrt();
        let plus = volume_d(1, 2, Sign::Plus, t, 400_000, 22).unwrap();
        let minus = volume_d(1, 2, Sign::Minus, t, 400_000, 23).unwrap();
        let reference = c * (plus.value - minus.value);
        let ref_se = c * plus.std_error.hypot(minus.std_error);
        assert!((m.mean - reference).abs() <= 3.0 * se.hypot(ref_se), "t={t}: {} vs {reference}", m.mean);
    }
}

#[test]
fn v_plus_increments_on_equal_clock_steps_are_poisson() {
    let f = uniform();
    // t_j = (j/4)^{1/4} makes t^{d(k+1)} = t^4 increase in equal steps
    let grid: Vec<f64> = (1..=4).map(|j| (j as f64 / 4.0).powf(0.25) * 1.2).collect();
    let ens = sample_v(1, &grid, &f, 2000, 31).unwrap();
    let mut means = Vec::new();
    for j in 0..grid.len() {
        let inc: Vec<f64> = ens
            .paths
            .iter()
            .map(|p| p.plus[j] - if j == 0 { 0.0 } else { p.plus[j - 1] })
            .collect();
        let m = moments(&inc);
        let dispersion = m.variance.unwrap() / m.mean;
        assert!((0.85..=1.15).contains(&dispersion), "interval {j}: dispersion {dispersion}");
        means.push(m.mean);
    }
    // equal clock steps carry equal intensity
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    for m in &means {
        assert!((m - avg).abs() <= 4.0 * (avg / 2000.0).sqrt(), "{means:?}");
    }
}

#[test]
fn h_marginals_follow_the_truncated_covariance() {
    let f = uniform();
    let grid = [0.15, 0.25, 0.3];
    let phi = phi_truncated(3, 1, &grid, &f, None, &CriticalOptions::default(), 200_000, 200_000, 41).unwrap();
    let g = grid.len();
    let cov = DMatrix::from_fn(g, g, |a, b| phi.values[a][b]);
    assert_eq!(GaussianFactor::new(&cov).unwrap().dim(), g);

    let ens = sample_h_truncated(&phi, 4000, 42).unwrap();
    for a in 0..g {
        let (v, se) = var_with_se(&ens.column(a));
        assert!((v - phi.values[a][a]).abs() <= 3.0 * se, "t={}: {v} vs {}", grid[a], phi.values[a][a]);
    }
    let rows: Vec<Vec<f64>> = ens.paths.iter().map(|p| p.values.clone()).collect();
    let sample_cov = cech_betti::experiments::stats::covariance(&rows).unwrap();
    for a in 0..g {
        for b in 0..g {
            assert_eq!(sample_cov[a][b], sample_cov[b][a]);
        }
    }
}

#[test]
fn ensembles_are_reproducible() {
    let f = uniform();
    let a = sample_v(1, &[0.5, 1.0], &f, 300, 7).unwrap();
    let b = sample_v(1, &[0.5, 1.0], &f, 300, 7).unwrap();
    let (mut wa, mut wb) = (Vec::new(), Vec::new());
    a.write_csv(&mut wa).unwrap();
    b.write_csv(&mut wb).unwrap();
    assert_eq!(wa, wb);
    let text = String::from_utf8(wa).unwrap();
    assert!(text.starts_with("# process=V"));
    assert_eq!(text.lines().nth(1), Some("replicate,t,value"));
}
