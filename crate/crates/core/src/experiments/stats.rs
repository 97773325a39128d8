//! Small statistics helpers: sample moments, covariance, chi-square tests.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

/// Sample mean, unbiased variance and the standardized third and fourth moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    /// `None` for fewer than two values.
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

pub fn moments(xs: &[f64]) -> SampleMoments {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return SampleMoments { mean: f64::NAN, variance: None, skewness: None, excess_kurtosis: None };
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return SampleMoments { mean, variance: None, skewness: None, excess_kurtosis: None };
    }
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let c = x - mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    SampleMoments { mean, variance: Some(variance), skewness, excess_kurtosis }
}

/// Unbiased sample covariance of the columns of `rows`.
pub fn covariance(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    if rows.len() < 2 {
        return None;
    }
    let g = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..g).map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; g]; g];
    for a in 0..g {
        for b in a..g {
            let s: f64 = rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum();
            cov[a][b] = s / (n - 1.0);
            cov[b][a] = cov[a][b];
        }
    }
    Some(cov)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(label, observed, expected)` per pooled cell.
    pub cells: Vec<(String, f64, f64)>,
}

fn p_value(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
}

/// Goodness of fit of nonnegative integer counts against `Poisson(lambda)`.
/// Cells are the values `0, 1, ...` while both the cell and the remaining
/// tail expect at least `min_expected`; the rest is one pooled tail cell.
pub fn poisson_chi_square(counts: &[u64], lambda: f64, min_expected: f64) -> ChiSquareResult {
    let total = counts.len() as f64;
    let pois = Poisson::new(lambda.max(1e-300)).expect("positive rate");
    let observed = |j: u64| counts.iter().filter(|&&c| c == j).count() as f64;
    let mut cells: Vec<(String, f64, f64)> = Vec::new();
    let mut tail = 1.0;
    let mut j = 0u64;
    while total * pois.pmf(j) >= min_expected && total * (tail - pois.pmf(j)) >= min_expected {
        cells.push((j.to_string(), observed(j), total * pois.pmf(j)));
        tail -= pois.pmf(j);
        j += 1;
    }
    let tail_obs = counts.iter().filter(|&&c| c >= j).count() as f64;
    cells.push((format!(">={j}"), tail_obs, total * tail.max(0.0)));
    let statistic = cells.iter().filter(|c| c.2 > 0.0).map(|(_, o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    ChiSquareResult { statistic, dof, p_value: p_value(statistic, dof), cells }
}

/// Two-sample chi-square test of homogeneity on discrete (vector) outcomes;
/// outcomes seen fewer than `min_count` times in total are pooled.
pub fn two_sample_chi_square<K: Ord + Clone + std::fmt::Debug>(a: &[K], b: &[K], min_count: f64) -> ChiSquareResult {
    let mut table: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    for x in a {
        table.entry(x.clone()).or_default().0 += 1.0;
    }
    for x in b {
        table.entry(x.clone()).or_default().1 += 1.0;
    }
    let mut cells: Vec<(String, f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (key, (x, y)) in table {
        if x + y >= min_count {
            cells.push((format!("{key:?}"), x, y));
        } else {
            pooled.0 += x;
            pooled.1 += y;
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        cells.push(("pooled".into(), pooled.0, pooled.1));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mut statistic = 0.0;
    for (_, x, y) in &cells {
        let col = x + y;
        let (ea, eb) = (na * col / n, nb * col / n);
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    // report the first sample's observed count against its expected share
    let cells = cells.into_iter().map(|(l, x, y)| (l, x, na * (x + y) / n)).collect();
    ChiSquareResult { statistic, dof, p_value: p_value(statistic, dof), cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_a_known_sample() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(m.skewness.unwrap().abs() < 1e-12);
        assert!((m.excess_kurtosis.unwrap() - (-1.36)).abs() < 1e-12);
        assert_eq!(moments(&[3.0]).variance, None);
    }

    #[test]
    fn covariance_is_symmetric() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]];
        let c = covariance(&rows).unwrap();
        assert_eq!(c[0][1], c[1][0]);
        assert!((c[0][0] - 1.0).abs() < 1e-12);
        assert!(covariance(&rows[..1]).is_none());
    }

    #[test]
    fn perfect_poisson_fit_has_large_p() {
        // counts laid out exactly at the expected frequencies of Poisson(1)
        let pois = Poisson::new(1.0).unwrap();
        let mut counts = Vec::new();
        for j in 0..12u64 {
            let reps = (10_000.0 * pois.pmf(j)).round() as usize;
            counts.extend(std::iter::repeat_n(j, reps));
        }
        let r = poisson_chi_square(&counts, 1.0, 5.0);
        assert!(r.p_value > 0.99, "{r:?}");
        assert!(r.cells.iter().all(|c| c.2 >= 5.0));
        let shifted: Vec<u64> = counts.iter().map(|c| c + 1).collect();
        assert!(poisson_chi_square(&shifted, 1.0, 5.0).p_value < 1e-6);
    }

    #[test]
    fn identical_samples_are_homogeneous() {
        let a: Vec<u8> = (0..300).map(|i| (i % 4) as u8).collect();
        let r = two_sample_chi_square(&a, &a, 5.0);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 3);
    }
}
