//! Čech geometry: filtration values, neighborhood graphs, simplex
//! enumeration and the empty-simplex indicators.
//!
//! Balls are closed throughout. A simplex belongs to `Č(𝒳, r)` iff its
//! filtration value (twice the minimum enclosing radius of its vertices) is
//! `<= r`, which makes `r ↦ β_k(Č(𝒳, r))` right-continuous. Filtration values
//! are stored in raw distance units; radius parameters `t` are scaled by the
//! cloud's `s_n` before being compared against them.

mod graph;
mod meb;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

pub use graph::{edges_within, CellGrid, Edge, UnionFind};
pub use meb::{enclosing_diameter, min_enclosing_ball};

use crate::error::{invalid, Error, Result};
use crate::pointproc::PointCloud;

/// Default cap on the number of simplices in one enumeration.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredSimplex {
    /// Sorted point indices; the simplex dimension is `len - 1`.
    pub vertices: Vec<usize>,
    /// Raw diameter at which the simplex enters the complex.
    pub value: f64,
}

impl FilteredSimplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices of `Č(𝒳, s_n · cutoff)` up to `max_dim`, in filtration order.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredComplex {
    pub max_dim: usize,
    /// Cutoff in radius units `t`; the raw cutoff is `scale * cutoff`.
    pub cutoff: f64,
    pub scale: f64,
    pub vertex_count: usize,
    /// Sorted by `(value, dim, vertices)`.
    pub simplices: Vec<FilteredSimplex>,
}

fn filtration_order(a: &FilteredSimplex, b: &FilteredSimplex) -> std::cmp::Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

impl FilteredComplex {
    pub fn raw_cutoff(&self) -> f64 {
        self.scale * self.cutoff
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }

    /// Checks that every face precedes its cofaces and values are ordered.
    pub fn validate(&self) -> Result<()> {
        let mut position: HashMap<&[usize], usize> = HashMap::with_capacity(self.simplices.len());
        for (pos, s) in self.simplices.iter().enumerate() {
            if pos > 0 && filtration_order(&self.simplices[pos - 1], s).is_gt() {
                return Err(Error::UnsortedFiltration { position: pos });
            }
            if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::UnsortedFiltration { position: pos });
            }
            if s.vertices.len() > 1 {
                let mut face = Vec::with_capacity(s.vertices.len() - 1);
                for skip in 0..s.vertices.len() {
                    face.clear();
                    face.extend(s.vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v));
                    match position.get(face.as_slice()) {
                        Some(&fp) if self.simplices[fp].value <= s.value => {}
                        _ => return Err(Error::UnsortedFiltration { position: pos }),
                    }
                }
            }
            position.insert(&s.vertices, pos);
        }
        Ok(())
    }

    /// `dim,value,v0,...` rows under a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# max_dim={} cutoff={} scale={} vertices={}",
            self.max_dim, self.cutoff, self.scale, self.vertex_count
        )?;
        let mut line = String::new();
        for s in &self.simplices {
            line.clear();
            write!(line, "{},{}", s.dim(), s.value).expect("write to string");
            for v in &s.vertices {
                write!(line, ",{v}").expect("write to string");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`FilteredComplex::write_csv`]. The metadata
    /// line is optional; without it the cutoff is the largest value seen.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta: HashMap<String, String> = HashMap::new();
        let mut simplices = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for field in rest.split_whitespace() {
                    if let Some((k, v)) = field.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let bad = |m: String| Error::Parse { line: lineno + 1, message: m };
            let mut fields = line.split(',').map(str::trim);
            let dim: usize = fields
                .next()
                .ok_or_else(|| bad("missing dim".into()))?
                .parse()
                .map_err(|e| bad(format!("dim: {e}")))?;
            let value: f64 = fields
                .next()
                .ok_or_else(|| bad("missing value".into()))?
                .parse()
                .map_err(|e| bad(format!("value: {e}")))?;
            let vertices: Vec<usize> = fields
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("vertex: {e}")))?;
            if vertices.len() != dim + 1 {
                return Err(bad(format!("dim {dim} needs {} vertices", dim + 1)));
            }
            simplices.push(FilteredSimplex { vertices, value });
        }
        let get = |key: &str| meta.get(key).and_then(|v| v.parse::<f64>().ok());
        let max_dim = simplices.iter().map(|s: &FilteredSimplex| s.dim()).max().unwrap_or(0);
        let max_value = simplices.iter().map(|s| s.value).fold(0.0, f64::max);
        let vertex_count = simplices.iter().flat_map(|s| s.vertices.iter()).max().map_or(0, |v| v + 1);
        let scale = get("scale").unwrap_or(1.0);
        let complex = FilteredComplex {
            max_dim: get("max_dim").map_or(max_dim, |v| v as usize).max(max_dim),
            cutoff: get("cutoff").unwrap_or(max_value / scale),
            scale,
            vertex_count: get("vertices").map_or(vertex_count, |v| v as usize).max(vertex_count),
            simplices,
        };
        complex.validate()?;
        Ok(complex)
    }
}

/// Smallest raw radius at which the simplex on `vertices` is present.
pub fn filtration_value(cloud: &PointCloud, vertices: &[usize]) -> Result<f64> {
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateVertex(w[0]));
    }
    if let Some(&v) = sorted.last() {
        if v >= cloud.len() {
            return Err(invalid(format!("vertex {v} out of range for {} points", cloud.len())));
        }
    }
    let pts: Vec<&[f64]> = sorted.iter().map(|&i| cloud.point(i)).collect();
    Ok(enclosing_diameter(&pts))
}

/// Edges of `Č(𝒫_n, s_n · t_max)`: all pairs at distance `<= s_n · t_max`.
pub fn neighborhood_graph(cloud: &PointCloud, t_max: f64) -> Vec<Edge> {
    edges_within(cloud.dim(), cloud.coords(), cloud.scale * t_max)
}

pub fn enumerate_simplices(cloud: &PointCloud, max_dim: usize, cutoff: f64) -> Result<FilteredComplex> {
    enumerate_simplices_with_budget(cloud, max_dim, cutoff, DEFAULT_SIMPLEX_BUDGET)
}

pub fn enumerate_simplices_with_budget(
    cloud: &PointCloud,
    max_dim: usize,
    cutoff: f64,
    budget: usize,
) -> Result<FilteredComplex> {
    if max_dim < 1 {
        return Err(invalid("max_dim must be at least 1"));
    }
    if !(cutoff > 0.0) {
        return Err(invalid("cutoff must be positive"));
    }
    let raw = cloud.scale * cutoff;
    let edges = edges_within(cloud.dim(), cloud.coords(), raw);
    let simplices = simplices_from_edges(cloud.dim(), cloud.coords(), &edges, max_dim, raw, budget)?;
    Ok(FilteredComplex { max_dim, cutoff, scale: cloud.scale, vertex_count: cloud.len(), simplices })
}

/// Clique expansion of `edges` followed by exact Čech values, keeping
/// simplices with value `<= raw_cutoff`. Returned in filtration order.
pub fn simplices_from_edges(
    dim: usize,
    coords: &[f64],
    edges: &[Edge],
    max_dim: usize,
    raw_cutoff: f64,
    budget: usize,
) -> Result<Vec<FilteredSimplex>> {
    let n = coords.len() / dim;
    let point = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut out: Vec<FilteredSimplex> = Vec::new();
    let charge = |count: usize, out_len: usize| -> Result<()> {
        if out_len + count > budget {
            return Err(Error::SimplexBudget { limit: budget });
        }
        Ok(())
    };
    charge(n, 0)?;
    out.extend((0..n).map(|i| FilteredSimplex { vertices: vec![i], value: 0.0 }));

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut level: Vec<FilteredSimplex> = Vec::new();
    for e in edges.iter().filter(|e| e.length <= raw_cutoff) {
        neighbors[e.i].push(e.j);
        neighbors[e.j].push(e.i);
        level.push(FilteredSimplex { vertices: vec![e.i, e.j], value: e.length });
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    charge(level.len(), out.len())?;

    let mut pts: Vec<&[f64]> = Vec::with_capacity(max_dim + 1);
    let mut face: Vec<usize> = Vec::with_capacity(max_dim + 1);
    for size in 3..=max_dim + 1 {
        // facet lookup is only needed once facets can be missing or clamped
        let facet_values: HashMap<&[usize], f64> = if size > 3 {
            level.iter().map(|s| (s.vertices.as_slice(), s.value)).collect()
        } else {
            HashMap::new()
        };
        let mut next: Vec<FilteredSimplex> = Vec::new();
        for s in &level {
            let last = *s.vertices.last().expect("nonempty simplex");
            'candidate: for &w in neighbors[last].iter().filter(|&&w| w > last) {
                for &v in &s.vertices[..s.vertices.len() - 1] {
                    if neighbors[v].binary_search(&w).is_err() {
                        continue 'candidate;
                    }
                }
                let mut value = s.value;
                if size > 3 {
                    for skip in 0..s.vertices.len() {
                        face.clear();
                        face.extend(s.vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v));
                        face.push(w);
                        match facet_values.get(face.as_slice()) {
                            Some(&v) => value = value.max(v),
                            None => continue 'candidate,
                        }
                    }
                } else {
                    for &v in &s.vertices {
                        let l: f64 = point(v).iter().zip(point(w)).map(|(a, b)| (a - b) * (a - b)).sum();
                        value = value.max(l.sqrt());
                    }
                }
                if value > raw_cutoff {
                    continue;
                }
                pts.clear();
                pts.extend(s.vertices.iter().map(|&v| point(v)));
                pts.push(point(w));
                value = value.max(enclosing_diameter(&pts));
                if value <= raw_cutoff {
                    let mut vertices = s.vertices.clone();
                    vertices.push(w);
                    next.push(FilteredSimplex { vertices, value });
                }
            }
            charge(next.len(), out.len() + level.len())?;
        }
        out.append(&mut level);
        level = next;
        if level.is_empty() {
            break;
        }
    }
    out.append(&mut level);
    out.sort_by(filtration_order);
    Ok(out)
}

/// `(τ⁺, τ⁻)` for `k + 2` points: the largest facet value and the value of
/// the whole set. `τ⁺ <= τ⁻` always.
pub fn empty_simplex_times(points: &[&[f64]]) -> (f64, f64) {
    let m = points.len();
    debug_assert!(m >= 2);
    let mut plus: f64 = 0.0;
    if m == 3 {
        for i in 0..3 {
            for j in i + 1..3 {
                let l: f64 = points[i].iter().zip(points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                plus = plus.max(l);
            }
        }
        plus = plus.sqrt();
    } else {
        let mut facet: Vec<&[f64]> = Vec::with_capacity(m - 1);
        for skip in 0..m {
            facet.clear();
            facet.extend(points.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| *p));
            plus = plus.max(enclosing_diameter(&facet));
        }
    }
    let minus = enclosing_diameter(points).max(plus);
    (plus, minus)
}

fn check_cardinality(points: &[&[f64]], k: usize) -> Result<()> {
    if points.len() != k + 2 {
        return Err(Error::WrongCardinality { expected: k + 2, got: points.len() });
    }
    Ok(())
}

/// 1 iff every `(k+1)`-subset of the `k + 2` points forms a simplex at `t`.
pub fn h_plus(points: &[&[f64]], k: usize, t: f64) -> Result<u8> {
    check_cardinality(points, k)?;
    Ok(u8::from(empty_simplex_times(points).0 <= t))
}

/// 1 iff the full set of `k + 2` points forms a simplex at `t`.
pub fn h_minus(points: &[&[f64]], k: usize, t: f64) -> Result<u8> {
    check_cardinality(points, k)?;
    Ok(u8::from(empty_simplex_times(points).1 <= t))
}

/// 1 iff the points span an empty `(k+1)`-simplex at `t`.
pub fn h(points: &[&[f64]], k: usize, t: f64) -> Result<u8> {
    check_cardinality(points, k)?;
    let (plus, minus) = empty_simplex_times(points);
    Ok(u8::from(plus <= t) - u8::from(minus <= t))
}
