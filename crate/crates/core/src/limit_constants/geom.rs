//! Small-configuration geometry shared by the estimators.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cechcore::{empty_simplex_times, simplices_from_edges, Edge};
use crate::homology::persistence_of_sorted;
use crate::pointproc::unit_ball_volume;

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Writes a uniform point of `B(center, r)` into `out`.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], r: f64, out: &mut [f64]) {
    let d = center.len();
    if d <= 4 {
        loop {
            let mut n2 = 0.0;
            for o in out.iter_mut() {
                *o = 2.0 * rng.random::<f64>() - 1.0;
                n2 += *o * *o;
            }
            if n2 <= 1.0 {
                break;
            }
        }
    } else {
        let mut n2 = 0.0;
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
            n2 += *o * *o;
        }
        let scale = rng.random::<f64>().powf(1.0 / d as f64) / n2.sqrt();
        out.iter_mut().for_each(|o| *o *= scale);
    }
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + r * *o;
    }
}

/// Smallest `t` at which the points (flat buffer) form a connected Čech
/// complex: the longest edge of a minimum spanning tree.
pub fn connection_threshold(d: usize, pts: &[f64]) -> f64 {
    let m = pts.len() / d;
    if m <= 1 {
        return 0.0;
    }
    let p = |i: usize| &pts[i * d..(i + 1) * d];
    let mut best = vec![f64::INFINITY; m];
    let mut done = vec![false; m];
    done[0] = true;
    for j in 1..m {
        best[j] = dist2(p(0), p(j));
    }
    let mut longest: f64 = 0.0;
    for _ in 1..m {
        let (next, w) = (0..m)
            .filter(|&j| !done[j])
            .map(|j| (j, best[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("unvisited vertex");
        longest = longest.max(w);
        done[next] = true;
        for j in 0..m {
            if !done[j] {
                best[j] = best[j].min(dist2(p(next), p(j)));
            }
        }
    }
    longest.sqrt()
}

/// `k`-bars of the Čech filtration on a handful of points, valid for radii
/// up to `cutoff` (deaths beyond it are reported as infinite).
pub fn small_config_bars(d: usize, pts: &[f64], k: usize, cutoff: f64) -> Vec<(f64, f64)> {
    let m = pts.len() / d;
    if m < k + 2 {
        return Vec::new();
    }
    if m == k + 2 {
        let refs: Vec<&[f64]> = pts.chunks_exact(d).collect();
        let (plus, minus) = empty_simplex_times(&refs);
        return if plus < minus && plus <= cutoff {
            vec![(plus, if minus <= cutoff { minus } else { f64::INFINITY })]
        } else {
            Vec::new()
        };
    }
    let mut edges = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let length = dist2(&pts[i * d..(i + 1) * d], &pts[j * d..(j + 1) * d]).sqrt();
            if length <= cutoff {
                edges.push(Edge { i, j, length });
            }
        }
    }
    let simplices = simplices_from_edges(d, pts, &edges, k + 1, cutoff, usize::MAX).expect("unbounded budget");
    persistence_of_sorted(&simplices, k).expect("sorted filtration").swap_remove(k).intervals
}

pub(crate) fn alive(bars: &[(f64, f64)], t: f64) -> usize {
    bars.iter().filter(|(b, e)| *b <= t && t < *e).count()
}

/// Random spanning-tree proposal: each new point is uniform in the radius-`rho`
/// ball around a uniformly chosen earlier point.
#[derive(Clone, Debug)]
pub(crate) struct TreeProposal {
    pub d: usize,
    pub rho: f64,
    ball: f64,
}

impl TreeProposal {
    pub fn new(d: usize, rho: f64) -> Self {
        Self { d, rho, ball: unit_ball_volume(d) * rho.powi(d as i32) }
    }

    /// Appends `m` points grown from the points already in `pts` (at least one).
    pub fn grow<R: Rng + ?Sized>(&self, rng: &mut R, pts: &mut Vec<f64>, m: usize) {
        let d = self.d;
        for _ in 0..m {
            let start = pts.len();
            let parent = rng.random_range(0..start / d);
            pts.resize(start + d, 0.0);
            let (head, tail) = pts.split_at_mut(start);
            sample_in_ball(rng, &head[parent * d..(parent + 1) * d], self.rho, tail);
        }
    }

    /// Density of the grown points `free`, symmetrized over their labels,
    /// given the fixed `root`.
    pub fn density(&self, root: &[f64], free: &[f64]) -> f64 {
        let d = self.d;
        let m = free.len() / d;
        if m == 0 {
            return 1.0;
        }
        let r2 = self.rho * self.rho;
        let p = |i: usize| &free[i * d..(i + 1) * d];
        let near_root: Vec<bool> = (0..m).map(|i| dist2(root, p(i)) <= r2).collect();
        let mut adj = vec![0u32; m];
        for i in 0..m {
            for j in i + 1..m {
                if dist2(p(i), p(j)) <= r2 {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        // g[S] = sum over orderings of S of prod (neighbors among root ∪ earlier) / position
        let full = (1usize << m) - 1;
        let mut g = vec![0.0f64; full + 1];
        g[0] = 1.0;
        for s in 0..full {
            if g[s] == 0.0 {
                continue;
            }
            let size = s.count_ones() as f64;
            for v in 0..m {
                if s >> v & 1 == 1 {
                    continue;
                }
                let nb = u32::from(near_root[v]) + (adj[v] & s as u32).count_ones();
                if nb > 0 {
                    g[s | 1 << v] += g[s] * nb as f64 / (size + 1.0);
                }
            }
        }
        let fact: f64 = (1..=m).map(|v| v as f64).product();
        g[full] / (fact * self.ball.powi(m as i32))
    }

    /// Density of `pts` when every point is free: a uniformly labelled root
    /// is drawn from `B(0, anchor_radius)` and the rest grown from it.
    pub fn density_anchored(&self, pts: &[f64], anchor_radius: f64) -> f64 {
        let d = self.d;
        let m = pts.len() / d;
        let anchor_vol = unit_ball_volume(d) * anchor_radius.powi(d as i32);
        let origin = vec![0.0; d];
        let mut rest = Vec::with_capacity(pts.len());
        let mut total = 0.0;
        for r in 0..m {
            let root = &pts[r * d..(r + 1) * d];
            if dist2(root, &origin) > anchor_radius * anchor_radius {
                continue;
            }
            rest.clear();
            for j in (0..m).filter(|&j| j != r) {
                rest.extend_from_slice(&pts[j * d..(j + 1) * d]);
            }
            total += self.density(root, &rest) / anchor_vol;
        }
        total / m as f64
    }
}
