//! The Betti process `t ↦ β_{k,n}(t)` and its component decompositions.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::cechcore::{edges_within, simplices_from_edges, Edge, DEFAULT_SIMPLEX_BUDGET};
use crate::error::{Error, Result};
use crate::homology::{component_census_records, components, persistence_of_sorted, ComponentBetti};
use crate::pointproc::{BoxRegion, PointCloud};

/// Metadata written into CSV headers.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveMeta {
    pub d: usize,
    pub k: usize,
    pub n: f64,
    pub scale: f64,
    pub seed: Option<u64>,
}

impl CurveMeta {
    pub fn of(cloud: &PointCloud, k: usize) -> Self {
        Self { d: cloud.dim(), k, n: cloud.intensity, scale: cloud.scale, seed: cloud.seed }
    }

    fn header(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".into(), |s| s.to_string());
        format!("# d={} k={} n={} s_n={} seed={}", self.d, self.k, self.n, self.scale, seed)
    }
}

/// Exact `β_{k,n}(t)` on `[0, t_max]`, stored as its `k`-th barcode.
#[derive(Clone, Debug, PartialEq)]
pub struct BettiCurve {
    pub meta: CurveMeta,
    pub t_max: f64,
    /// `k`-bars in raw radius units; deaths past the cutoff are infinite.
    pub bars: Vec<(f64, f64)>,
}

impl BettiCurve {
    pub fn k(&self) -> usize {
        self.meta.k
    }

    pub fn scale(&self) -> f64 {
        self.meta.scale
    }

    /// `β_{k,n}(t)`: bars with `birth <= s_n t < death`.
    pub fn value_at(&self, t: f64) -> usize {
        self.value_at_raw(self.meta.scale * t)
    }

    /// `β` at raw filtration value `r`, free of the `t -> r` rounding.
    pub fn value_at_raw(&self, r: f64) -> usize {
        self.bars.iter().filter(|(b, d)| *b <= r && r < *d).count()
    }

    pub fn values_on(&self, grid: &[f64]) -> Vec<usize> {
        grid.iter().map(|&t| self.value_at(t)).collect()
    }

    /// Jump locations in `t` units within `[0, t_max]`, sorted and deduplicated.
    pub fn critical_points(&self) -> Vec<f64> {
        let s = self.meta.scale;
        let mut pts: Vec<f64> = self
            .bars
            .iter()
            .flat_map(|(b, d)| [*b, *d])
            .filter(|r| r.is_finite())
            .map(|r| r / s)
            .filter(|t| *t <= self.t_max)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Steps `(t, β(t))` at `0`, every jump, and `t_max`.
    pub fn steps(&self) -> Vec<(f64, usize)> {
        let s = self.meta.scale;
        let top = s * self.t_max;
        let mut rs = vec![0.0];
        rs.extend(self.bars.iter().flat_map(|(b, d)| [*b, *d]).filter(|r| r.is_finite() && *r <= top));
        rs.push(top);
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        rs.into_iter().map(|r| (r / s, self.value_at_raw(r))).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} t_max={}", self.meta.header(), self.t_max)?;
        writeln!(w, "t,beta")?;
        for (t, b) in self.steps() {
            writeln!(w, "{t},{b}")?;
        }
        Ok(())
    }
}

/// `β_{k,n}(t)` for `t <= t_max`, from persistence run per component of
/// `Č(𝒫_n, s_n t_max)`.
pub fn betti_curve(cloud: &PointCloud, k: usize, t_max: f64) -> Result<BettiCurve> {
    betti_curve_with_budget(cloud, k, t_max, DEFAULT_SIMPLEX_BUDGET)
}

pub fn betti_curve_with_budget(cloud: &PointCloud, k: usize, t_max: f64, budget: usize) -> Result<BettiCurve> {
    let d = cloud.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    if !(t_max > 0.0) {
        return Err(crate::error::invalid("t_max must be positive"));
    }
    let radius = cloud.scale * t_max;
    let edges = edges_within(d, cloud.coords(), radius);
    let groups: Vec<Vec<usize>> = components(cloud, &edges, radius)
        .into_iter()
        .filter(|g| g.len() >= k + 2)
        .collect();
    let mut slot = vec![usize::MAX; cloud.len()];
    let mut local = vec![0usize; cloud.len()];
    for (g, members) in groups.iter().enumerate() {
        for (i, &v) in members.iter().enumerate() {
            slot[v] = g;
            local[v] = i;
        }
    }
    let mut group_edges: Vec<Vec<Edge>> = vec![Vec::new(); groups.len()];
    for e in &edges {
        let g = slot[e.i];
        if g != usize::MAX {
            let (a, b) = (local[e.i], local[e.j]);
            group_edges[g].push(Edge { i: a.min(b), j: a.max(b), length: e.length });
        }
    }
    let per_group: Vec<Vec<(f64, f64)>> = groups
        .par_iter()
        .zip(group_edges.par_iter())
        .map(|(members, edges)| {
            let coords: Vec<f64> = members.iter().flat_map(|&v| cloud.point(v).iter().copied()).collect();
            let simplices = simplices_from_edges(d, &coords, edges, k + 1, radius, budget)?;
            let bars = persistence_of_sorted(&simplices, k)?;
            Ok(bars[k].intervals.clone())
        })
        .collect::<Result<_>>()?;
    let mut bars: Vec<(f64, f64)> = per_group.into_iter().flatten().collect();
    bars.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(BettiCurve { meta: CurveMeta::of(cloud, k), t_max, bars })
}

/// `L_{k,n}(t) = ∫_0^t β_{k,n}(s) ds`, exactly, in `t` units.
pub fn lifetime_sum(curve: &BettiCurve, t: f64) -> f64 {
    let r = curve.meta.scale * t;
    let raw: f64 = curve.bars.iter().map(|(b, d)| d.min(r) - b.min(r)).sum();
    raw / curve.meta.scale
}

/// Component counts `U_{i,j}` at a fixed radius.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComponentCensus {
    pub t: f64,
    pub k: usize,
    /// `(i, j) ↦ U_{i,j}` for components with `β_k = j > 0`.
    pub counts: BTreeMap<(usize, usize), u64>,
    /// `i ↦` number of components of size `i` with `β_k = 0`.
    pub trivial: BTreeMap<usize, u64>,
}

impl ComponentCensus {
    pub fn from_components<'a>(t: f64, k: usize, comps: impl IntoIterator<Item = &'a ComponentBetti>) -> Self {
        let mut census = ComponentCensus { t, k, ..Default::default() };
        for c in comps {
            census.add(c.size(), c.betti);
        }
        census
    }

    pub fn add(&mut self, size: usize, betti: usize) {
        if betti > 0 {
            *self.counts.entry((size, betti)).or_default() += 1;
        } else {
            *self.trivial.entry(size).or_default() += 1;
        }
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts.get(&(i, j)).copied().unwrap_or(0)
    }

    /// `Σ_{i,j} j U_{i,j}`.
    pub fn betti(&self) -> u64 {
        self.counts.iter().map(|((_, j), c)| *j as u64 * c).sum()
    }

    /// `S_{k,n}(t) = U_{k+2,1}`: components that are a single empty simplex.
    pub fn s(&self) -> u64 {
        self.count(self.k + 2, 1)
    }

    /// `R_{k,n}(t)`: the contribution of components with more than `k + 2` points.
    pub fn r(&self) -> u64 {
        self.counts
            .iter()
            .filter(|((i, _), _)| *i > self.k + 2)
            .map(|((_, j), c)| *j as u64 * c)
            .sum()
    }

    /// `Σ_j j U_{i,j}` for a single size `i`.
    pub fn weighted_count(&self, i: usize) -> u64 {
        self.counts.range((i, 0)..(i + 1, 0)).map(|((_, j), c)| *j as u64 * c).sum()
    }

    pub fn largest_size(&self) -> usize {
        let a = self.counts.keys().map(|(i, _)| *i).max().unwrap_or(0);
        let b = self.trivial.keys().copied().max().unwrap_or(0);
        a.max(b)
    }
}

/// Census at `t` over all components.
pub fn census(cloud: &PointCloud, k: usize, t: f64) -> Result<ComponentCensus> {
    let records = component_census_records(cloud, t, k, DEFAULT_SIMPLEX_BUDGET)?;
    Ok(ComponentCensus::from_components(t, k, &records))
}

/// `β^{(M)} = Σ_{i <= M} Σ_j j U_{i,j}`; pass `usize::MAX` for no truncation.
pub fn truncated_betti(census: &ComponentCensus, m: usize) -> u64 {
    census
        .counts
        .iter()
        .filter(|((i, _), _)| *i <= m)
        .map(|((_, j), c)| *j as u64 * c)
        .sum()
}

/// Index of the dictionary-order smallest point among `vertices`, ties
/// broken by index.
pub fn leftmost_point(cloud: &PointCloud, vertices: &[usize]) -> usize {
    *vertices
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (cloud.point(a), cloud.point(b));
            pa.iter()
                .zip(pb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .expect("component is nonempty")
}

/// Census keeping only components whose left-most point lies in `region`.
pub fn restrict_lmp(
    cloud: &PointCloud,
    records: &[ComponentBetti],
    t: f64,
    k: usize,
    region: &BoxRegion,
) -> ComponentCensus {
    ComponentCensus::from_components(
        t,
        k,
        records.iter().filter(|c| region.contains(cloud.point(leftmost_point(cloud, &c.vertices)))),
    )
}

/// `t,i,j,count` rows; trivial components appear with `j = 0`.
pub fn write_census_csv<W: Write>(censuses: &[ComponentCensus], meta: &CurveMeta, mut w: W) -> Result<()> {
    writeln!(w, "{}", meta.header())?;
    writeln!(w, "t,i,j,count")?;
    for c in censuses {
        for (i, n) in &c.trivial {
            writeln!(w, "{},{},0,{}", c.t, i, n)?;
        }
        for ((i, j), n) in &c.counts {
            writeln!(w, "{},{},{},{}", c.t, i, j, n)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(scale: f64, origin: [f64; 2]) -> Vec<Vec<f64>> {
        let h = 3f64.sqrt() / 2.0;
        vec![
            vec![origin[0], origin[1]],
            vec![origin[0] + scale, origin[1]],
            vec![origin[0] + 0.5 * scale, origin[1] + h * scale],
        ]
    }

    #[test]
    fn empty_cloud_curve_is_zero() {
        let c = PointCloud::new(2, vec![], 0.1).unwrap();
        let curve = betti_curve(&c, 1, 3.0).unwrap();
        assert!(curve.bars.is_empty());
        assert_eq!(curve.value_at(1.0), 0);
    }

    #[test]
    fn triangle_curve_and_lifetime() {
        let s = 0.01;
        let c = PointCloud::from_points(2, &triangle(s, [0.3, 0.3]), s).unwrap();
        let curve = betti_curve(&c, 1, 2.0).unwrap();
        let fill = 2.0 / 3f64.sqrt();
        assert_eq!(curve.value_at(0.999), 0);
        assert_eq!(curve.value_at(1.0001), 1);
        assert_eq!(curve.value_at(fill - 1e-6), 1);
        assert_eq!(curve.value_at(fill + 1e-6), 0);
        assert_eq!(lifetime_sum(&curve, 0.5), 0.0);
        assert!((lifetime_sum(&curve, 1.5) - (fill - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn census_of_empty_triangles() {
        let mut pts = triangle(1.0, [0.0, 0.0]);
        pts.extend(triangle(1.0, [10.0, 0.0]));
        pts.push(vec![20.0, 20.0]);
        let c = PointCloud::from_points(2, &pts, 1.0).unwrap();
        let cen = census(&c, 1, 1.05).unwrap();
        assert_eq!(cen.s(), 2);
        assert_eq!(cen.r(), 0);
        assert_eq!(cen.betti(), 2);
        assert_eq!(cen.trivial.get(&1), Some(&1));
        assert_eq!(truncated_betti(&cen, 3), 2);
        assert_eq!(truncated_betti(&cen, usize::MAX), 2);
    }

    #[test]
    fn lmp_restriction() {
        let mut pts = triangle(1.0, [0.0, 0.0]);
        pts.extend(triangle(1.0, [10.0, 0.0]));
        let c = PointCloud::from_points(2, &pts, 1.0).unwrap();
        let records = component_census_records(&c, 1.05, 1, DEFAULT_SIMPLEX_BUDGET).unwrap();
        let left = BoxRegion::new(vec![-1.0, -1.0], vec![5.0, 5.0]).unwrap();
        let right = BoxRegion::new(vec![5.0, -1.0], vec![15.0, 5.0]).unwrap();
        assert_eq!(restrict_lmp(&c, &records, 1.05, 1, &left).s(), 1);
        assert_eq!(restrict_lmp(&c, &records, 1.05, 1, &right).s(), 1);
        assert_eq!(leftmost_point(&c, &[4, 3, 5]), 3);
    }

    #[test]
    fn csv_headers() {
        let c = PointCloud::from_points(2, &triangle(1.0, [0.0, 0.0]), 1.0).unwrap();
        let curve = betti_curve(&c, 1, 2.0).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# d=2 k=1 n=3 s_n=1 seed=none"));
        assert!(text.contains("\nt,beta\n0,0\n1,1\n"));
        let cen = census(&c, 1, 1.05).unwrap();
        let mut buf = Vec::new();
        write_census_csv(&[cen], &curve.meta, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("t,i,j,count\n1.05,3,1,1\n"));
    }
}
