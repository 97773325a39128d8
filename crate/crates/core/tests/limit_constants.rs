//! Monte Carlo limit constants against quadrature, closed forms, simulation
//! and each other.

use cech_betti::betti_process::census;
use cech_betti::cechcore::empty_simplex_times;
use cech_betti::limit_constants::{
    eta, mu, nu, phi_truncated, union_ball_volume, volume_d, volume_d1, CriticalOptions, McEstimate, Proposal, Sign,
};
use cech_betti::pointproc::{c_f_k, factorial, sample_poisson_process, Density};
use cech_betti::rng::stream_rng;
use rayon::prelude::*;

fn uniform() -> Density {
    Density::uniform_cube(2, 1.0).unwrap()
}

fn joint(a: &McEstimate, b: &McEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Rectangle rule for `m(D_1^±)` with `cells` per axis over `[-1, 1]^4`.
/// The lattice is shifted by generic offsets: an aligned lattice puts
/// differences `y1 - y2` exactly on the unit circle and overcounts.
fn d1_quadrature(sign: Sign, cells: usize) -> f64 {
    let w = 2.0 / cells as f64;
    let offsets = [0.3141, 0.2718, 0.5772, 0.6917];
    let node = |axis: usize, i: usize| -1.0 - w + (i as f64 + offsets[axis]) * w;
    let hits: u64 = (0..=cells)
        .into_par_iter()
        .map(|a| {
            let mut hits = 0u64;
            let origin = [0.0, 0.0];
            for b in 0..=cells {
                let y1 = [node(0, a), node(1, b)];
                if y1[0].hypot(y1[1]) > 1.0 {
                    continue;
                }
                for c in 0..=cells {
                    for d in 0..=cells {
                        let y2 = [node(2, c), node(3, d)];
                        let (plus, minus) = empty_simplex_times(&[&origin, &y1, &y2]);
                        let tau = if sign == Sign::Plus { plus } else { minus };
                        hits += u64::from(tau <= 1.0);
                    }
                }
            }
            hits
        })
        .sum();
    hits as f64 * w.powi(4)
}

#[test]
fn d1_volumes_match_grid_quadrature() {
    for sign in [Sign::Plus, Sign::Minus] {
        let est = volume_d1(1, 2, sign, 1_000_000, 41).unwrap();
        let fine = d1_quadrature(sign, 40);
        // the coarse/fine gap bounds the quadrature error of an indicator
        let quad_err = (fine - d1_quadrature(sign, 20)).abs();
        let tol = 3.0 * est.std_error + quad_err;
        assert!((est.value - fine).abs() <= tol, "{sign:?}: {} vs {fine} (tol {tol})", est.value);
    }
}

#[test]
fn d_volumes_scale_homogeneously() {
    for (k, d) in [(1, 2), (1, 3), (2, 3)] {
        let p = (d * (k + 1)) as i32;
        for sign in [Sign::Plus, Sign::Minus] {
            let one = volume_d1(k, d, sign, 200_000, 1).unwrap();
            for t in [0.5, 2.0] {
                let scaled = volume_d(k, d, sign, t, 200_000, 2).unwrap().scaled(t.powi(-p));
                assert!((scaled.value - one.value).abs() <= 3.0 * joint(&scaled, &one), "k={k} d={d} t={t}");
            }
        }
        let (plus, minus) = (volume_d1(k, d, Sign::Plus, 200_000, 3).unwrap(), volume_d1(k, d, Sign::Minus, 200_000, 4).unwrap());
        assert!(minus.value <= plus.value + 3.0 * joint(&plus, &minus));
    }
}

#[test]
fn lens_union_area() {
    // two unit discs at distance 1 overlap in 2π/3 − √3/2
    let lens = 2.0 * std::f64::consts::PI - (2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0);
    assert!((lens - 5.0548).abs() < 1e-4);
    let est = union_ball_volume(&[vec![0.0, 0.0], vec![1.0, 0.0]], 1.0, 400_000, 9).unwrap();
    assert!((est.value - lens).abs() <= 3.0 * est.std_error, "{} vs {lens}", est.value);
    let disjoint = union_ball_volume(&[vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]], 1.0, 400_000, 10).unwrap();
    let two = 2.0 * 4.0 * std::f64::consts::PI / 3.0;
    assert!((disjoint.value - two).abs() <= 3.0 * disjoint.std_error);
}

fn assert_halving(name: &str, small: &McEstimate, large: &McEstimate) {
    let ratio = large.std_error / small.std_error;
    assert!((0.6..=0.85).contains(&ratio), "{name}: se ratio {ratio}");
}

#[test]
fn standard_errors_shrink_with_root_samples() {
    let f = uniform();
    let opts = CriticalOptions::default();
    let n = 100_000;
    assert_halving("d1_volume", &volume_d1(1, 2, Sign::Plus, n, 5).unwrap(), &volume_d1(1, 2, Sign::Plus, 2 * n, 6).unwrap());
    assert_halving("mu", &mu(1, None, 1.0, 0.95, &f, n, 5).unwrap(), &mu(1, None, 1.0, 0.95, &f, 2 * n, 6).unwrap());
    assert_halving(
        "union",
        &union_ball_volume(&[vec![0.0, 0.0], vec![0.5, 0.5]], 0.6, n, 5).unwrap(),
        &union_ball_volume(&[vec![0.0, 0.0], vec![0.5, 0.5]], 0.6, 2 * n, 6).unwrap(),
    );
    assert_halving(
        "eta",
        &eta(1, 3, 1, 1, 0.3, 0.3, &f, None, &opts, n, 5).unwrap(),
        &eta(1, 3, 1, 1, 0.3, 0.3, &f, None, &opts, 2 * n, 6).unwrap(),
    );
    // the (1, 1) classes of ν are a rare event (about 1e-5 of samples hit),
    // so the scaling is checked on the trivial classes through the same code
    assert_halving(
        "nu",
        &nu(1, 3, 3, 0, 0, 0.3, 0.3, &f, None, &opts, n, 5).unwrap(),
        &nu(1, 3, 3, 0, 0, 0.3, 0.3, &f, None, &opts, 2 * n, 6).unwrap(),
    );
}

#[test]
fn mu_identities() {
    let f = uniform();
    assert_eq!(mu(1, None, 0.0, 1.0, &f, 1000, 1).unwrap().value, 0.0);
    let a = mu(1, None, 0.7, 1.1, &f, 100_000, 2).unwrap();
    let b = mu(1, None, 1.1, 0.7, &f, 100_000, 2).unwrap();
    assert_eq!(a.value, b.value);

    // h = h⁺ − h⁻, so μ(t, t) is C_{f,k} times the D-volume difference
    for t in [0.5, 1.0, 2.0] {
        let direct = mu(1, None, t, t, &f, 1_000_000, 3).unwrap();
        let plus = volume_d(1, 2, Sign::Plus, t, 1_000_000, 4).unwrap();
        let minus = volume_d(1, 2, Sign::Minus, t, 1_000_000, 5).unwrap();
        let c = c_f_k(&f, 1).unwrap();
        let diff = c * (plus.value - minus.value);
        let se = (direct.std_error.powi(2) + c * c * (plus.std_error.powi(2) + minus.std_error.powi(2))).sqrt();
        assert!((direct.value - diff).abs() <= 3.0 * se, "t={t}: {} vs {diff}", direct.value);
    }

    // μ(t, t) ∝ t^{d(k+1)}
    let one = mu(1, None, 1.0, 1.0, &f, 1_000_000, 6).unwrap();
    for t in [0.5, 2.0] {
        let scaled = mu(1, None, t, t, &f, 1_000_000, 7).unwrap().scaled(t.powi(-4));
        assert!((scaled.value - one.value).abs() <= 3.0 * joint(&scaled, &one), "t={t}");
    }
}

#[test]
fn eta_edge_cases() {
    let f = uniform();
    let opts = CriticalOptions::default();
    assert_eq!(eta(1, 3, 2, 1, 0.5, 0.5, &f, None, &opts, 10_000, 1).unwrap().value, 0.0);
    assert_eq!(eta(1, 3, 1, 1, 0.0, 0.0, &f, None, &opts, 10_000, 1).unwrap().value, 0.0);
    let tiny = eta(1, 3, 1, 1, 1e-6, 1e-6, &f, None, &opts, 10_000, 1).unwrap();
    assert!(tiny.value.abs() < 1e-18, "{}", tiny.value);
}

#[test]
fn eta_box_size_does_not_matter() {
    let f = uniform();
    let tight = CriticalOptions { proposal: Proposal::Box { enlarge: 1.0 }, ..Default::default() };
    let loose = CriticalOptions { proposal: Proposal::Box { enlarge: 2.0 }, ..Default::default() };
    let a = eta(1, 3, 1, 1, 0.4, 0.4, &f, None, &tight, 1_000_000, 1).unwrap();
    let b = eta(1, 3, 1, 1, 0.4, 0.4, &f, None, &loose, 1_000_000, 2).unwrap();
    assert!((a.value - b.value).abs() <= 3.0 * joint(&a, &b), "{a:?} vs {b:?}");
    let tree = eta(1, 3, 1, 1, 0.4, 0.4, &f, None, &CriticalOptions::default(), 1_000_000, 3).unwrap();
    assert!((a.value - tree.value).abs() <= 3.0 * joint(&a, &tree), "{a:?} vs {tree:?}");
}

#[test]
fn literal_exponent_differs_only_off_unit_radius() {
    // a dense anchor makes the void factor matter
    let f = Density::uniform_cube(2, 0.5).unwrap();
    let default = CriticalOptions::default();
    let literal = CriticalOptions { literal_exponent: true, ..Default::default() };
    let a = eta(1, 3, 1, 1, 1.0, 1.0, &f, None, &default, 400_000, 3).unwrap();
    let b = eta(1, 3, 1, 1, 1.0, 1.0, &f, None, &literal, 400_000, 4).unwrap();
    assert!((a.value - b.value).abs() <= 3.0 * joint(&a, &b), "{a:?} vs {b:?}");
    let c = eta(1, 3, 1, 1, 0.5, 0.5, &f, None, &default, 400_000, 5).unwrap();
    let d = eta(1, 3, 1, 1, 0.5, 0.5, &f, None, &literal, 400_000, 6).unwrap();
    assert!((c.value - d.value).abs() > 3.0 * joint(&c, &d), "{c:?} vs {d:?}");
}

/// Critical regime on the unit square: `s_n = n^{-1/2}`, replicate values
/// of `(U_{3,1}, S)` at radius `t`.
fn simulate_small_cycles(n: f64, t: f64, replicates: u64, seed: u64) -> Vec<(f64, f64)> {
    let f = uniform();
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let cloud = sample_poisson_process(&f, n, n.powf(-0.5), &mut stream_rng(seed, r)).unwrap();
            let c = census(&cloud, 1, t).unwrap();
            (c.count(3, 1) as f64, c.s() as f64)
        })
        .collect()
}

#[test]
fn eta_matches_simulated_small_cycle_counts() {
    let (n, t) = (10_000.0, 0.25);
    let sims = simulate_small_cycles(n, t, 1500, 71);
    let mean = sims.iter().map(|s| s.0).sum::<f64>() / sims.len() as f64 / n;
    let est = eta(1, 3, 1, 1, t, t, &uniform(), None, &CriticalOptions::default(), 1_000_000, 72).unwrap();
    let reference = est.value / factorial(3);
    assert!((mean - reference).abs() <= 0.10 * reference, "{mean} vs {reference}");
}

#[test]
fn small_cycle_variance_matches_eta_plus_nu() {
    let (n, t) = (5000.0, 0.3);
    let sims = simulate_small_cycles(n, t, 3000, 81);
    let m = sims.iter().map(|s| s.1).sum::<f64>() / sims.len() as f64;
    let var = sims.iter().map(|s| (s.1 - m).powi(2)).sum::<f64>() / (sims.len() - 1) as f64 / n;
    let f = uniform();
    let opts = CriticalOptions::default();
    let e = eta(1, 3, 1, 1, t, t, &f, None, &opts, 1_000_000, 82).unwrap();
    let v = nu(1, 3, 3, 1, 1, t, t, &f, None, &opts, 1_000_000, 83).unwrap();
    let reference = e.value / 6.0 + v.value / 36.0;
    assert!((var - reference).abs() <= 0.15 * reference, "{var} vs {reference}");
}

#[test]
fn nu_is_finite_and_dominated_at_small_radius() {
    let f = uniform();
    let opts = CriticalOptions::default();
    let v = nu(1, 3, 3, 1, 1, 0.2, 0.2, &f, None, &opts, 400_000, 91).unwrap();
    let e = eta(1, 3, 1, 1, 0.2, 0.2, &f, None, &opts, 400_000, 92).unwrap();
    assert!(v.value.is_finite() && v.std_error.is_finite());
    assert!(v.value.abs() / e.value < 1.0, "|ν|/η = {}", v.value.abs() / e.value);
}

#[test]
fn phi_at_minimal_truncation_is_the_single_class_terms() {
    let f = uniform();
    let opts = CriticalOptions::default();
    let t = 0.3;
    let phi = phi_truncated(3, 1, &[t], &f, None, &opts, 400_000, 400_000, 11).unwrap();
    let e = eta(1, 3, 1, 1, t, t, &f, None, &opts, 400_000, 12).unwrap();
    let v = nu(1, 3, 3, 1, 1, t, t, &f, None, &opts, 400_000, 13).unwrap();
    let terms = e.value / 6.0 + v.value / 36.0;
    let se = (e.std_error / 6.0).hypot(v.std_error / 36.0);
    let diag = phi.get(0, 0);
    assert!((diag.value - terms).abs() <= 3.0 * diag.std_error.hypot(se), "{} vs {terms}", diag.value);
    assert!(phi_truncated(2, 1, &[t], &f, None, &opts, 1000, 1000, 11).is_err());
}
