//! Volumes and masses of unions of balls `ℬ(𝒳; r) = ∪ B(x; r)`.

use rand::Rng;

use super::geom::dist2;
use super::{mc_mean, McEstimate};
use crate::error::{invalid, Result};
use crate::pointproc::{BoxRegion, Density};

/// Bounding box of the balls `B(c_i, r_i)`.
pub(crate) fn bounding_box(d: usize, centers: &[f64], radii: &[f64]) -> BoxRegion {
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (c, r) in centers.chunks_exact(d).zip(radii) {
        for a in 0..d {
            lo[a] = lo[a].min(c[a] - r);
            hi[a] = hi[a].max(c[a] + r);
        }
    }
    BoxRegion { lo, hi }
}

fn covered(centers: &[f64], radii: &[f64], x: &[f64]) -> bool {
    let d = x.len();
    centers.chunks_exact(d).zip(radii).any(|(c, r)| dist2(c, x) <= r * r)
}

fn check(centers: &[Vec<f64>], radii: &[f64]) -> Result<usize> {
    let d = centers.first().map_or(0, Vec::len);
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(invalid("centers must be nonempty and share a dimension"));
    }
    if radii.len() != centers.len() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("one positive radius per center required"));
    }
    Ok(d)
}

/// `m(ℬ(centers; r))`, uniform sampling on the bounding box.
pub fn union_ball_volume(centers: &[Vec<f64>], r: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    union_ball_volume_radii(centers, &vec![r; centers.len()], samples, seed)
}

/// Volume of `∪ B(c_i, r_i)` with per-ball radii.
pub fn union_ball_volume_radii(centers: &[Vec<f64>], radii: &[f64], samples: u64, seed: u64) -> Result<McEstimate> {
    let d = check(centers, radii)?;
    let flat = centers.concat();
    let bbox = bounding_box(d, &flat, radii);
    let vol = bbox.volume();
    mc_mean(samples, seed, |rng| {
        let mut x = vec![0.0; d];
        bbox.sample_uniform(rng, &mut x);
        Ok(if covered(&flat, radii, &x) { vol } else { 0.0 })
    })
}

/// `∫_{ℬ(centers; r)} f`.
pub fn union_ball_mass(
    centers: &[Vec<f64>],
    r: f64,
    density: &Density,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let radii = vec![r; centers.len()];
    let d = check(centers, &radii)?;
    let flat = centers.concat();
    let bbox = bounding_box(d, &flat, &radii);
    let vol = bbox.volume();
    mc_mean(samples, seed, |rng| {
        let mut x = vec![0.0; d];
        bbox.sample_uniform(rng, &mut x);
        Ok(if covered(&flat, &radii, &x) { vol * density.evaluate(&x) } else { 0.0 })
    })
}

/// Draws the points of a homogeneous Poisson process of `intensity` on `bbox`.
pub(crate) fn poisson_points<R: Rng + ?Sized>(rng: &mut R, bbox: &BoxRegion, intensity: f64, out: &mut Vec<f64>) {
    out.clear();
    let mean = intensity * bbox.volume();
    if !(mean > 0.0) {
        return;
    }
    let count = poisson_count(rng, mean);
    let d = bbox.dim();
    out.resize(count * d, 0.0);
    for p in out.chunks_exact_mut(d) {
        bbox.sample_uniform(rng, p);
    }
}

fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean < 30.0 {
        // inversion by sequential search
        let mut u: f64 = rng.random();
        let mut k = 0usize;
        let mut p = (-mean).exp();
        loop {
            if u <= p || p == 0.0 {
                return k;
            }
            u -= p;
            k += 1;
            p *= mean / k as f64;
        }
    }
    use rand_distr::{Distribution, Poisson};
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}
