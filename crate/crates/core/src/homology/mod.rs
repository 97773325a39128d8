//! Homology over GF(2): Betti numbers of a fixed complex, persistence
//! barcodes of a filtration, and Betti numbers per connected component.

pub mod gf2;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::cechcore::{edges_within, simplices_from_edges, Edge, FilteredComplex, FilteredSimplex, UnionFind};
use crate::error::{invalid, Error, Result};
use crate::pointproc::PointCloud;
use gf2::BitColumn;

/// Persistence intervals in one homological dimension, in raw radius units.
#[derive(Clone, Debug, PartialEq)]
pub struct Barcode {
    pub q: usize,
    /// `(birth, death)` with `death = f64::INFINITY` for essential classes.
    pub intervals: Vec<(f64, f64)>,
}

impl Barcode {
    /// Number of intervals with `birth <= r < death`.
    pub fn alive_at(&self, r: f64) -> usize {
        self.intervals.iter().filter(|(b, d)| *b <= r && r < *d).count()
    }
}

/// `β_0, ..., β_{max_q}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BettiVector(pub Vec<usize>);

impl BettiVector {
    pub fn get(&self, q: usize) -> usize {
        self.0.get(q).copied().unwrap_or(0)
    }
}

/// Betti numbers of `{σ : value(σ) <= s_n t}`, by direct rank computation.
pub fn betti_at(complex: &FilteredComplex, t: f64, max_q: usize) -> Result<BettiVector> {
    if t > complex.cutoff {
        return Err(Error::BeyondCutoff { t, cutoff: complex.cutoff });
    }
    if max_q + 1 > complex.max_dim {
        return Err(invalid(format!(
            "Betti numbers up to q={max_q} need simplices of dimension {}, complex stops at {}",
            max_q + 1,
            complex.max_dim
        )));
    }
    Ok(betti_of_simplices(&complex.simplices, complex.scale * t, max_q))
}

/// Betti numbers of the simplices with value `<= raw_t`. The list must be
/// closed under faces at every threshold and reach dimension `max_q + 1`.
pub fn betti_of_simplices(simplices: &[FilteredSimplex], raw_t: f64, max_q: usize) -> BettiVector {
    let by_dim = split_by_dim(simplices.iter().filter(|s| s.value <= raw_t), max_q + 1);
    let index: Vec<HashMap<&[usize], usize>> = by_dim
        .iter()
        .map(|list| list.iter().enumerate().map(|(i, s)| (s.vertices.as_slice(), i)).collect())
        .collect();
    // rank ∂_q for q = 1..=max_q+1; rank ∂_0 = 0
    let mut ranks = vec![0usize; max_q + 2];
    ranks[1] = vertex_rank(&by_dim[0], &by_dim[1]);
    for q in 2..=max_q + 1 {
        let cols = by_dim[q].iter().map(|s| boundary(s, &index[q - 1]));
        ranks[q] = gf2::rank(cols);
    }
    BettiVector(
        (0..=max_q)
            .map(|q| by_dim[q].len() - ranks[q] - ranks[q + 1])
            .collect(),
    )
}

/// Rank of ∂_1 equals vertices minus connected components.
fn vertex_rank(vertices: &[&FilteredSimplex], edges: &[&FilteredSimplex]) -> usize {
    let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, s)| (s.vertices[0], i)).collect();
    let mut uf = UnionFind::new(vertices.len());
    for e in edges {
        uf.union(local[&e.vertices[0]], local[&e.vertices[1]]);
    }
    vertices.len() - uf.components()
}

fn split_by_dim<'a>(
    simplices: impl Iterator<Item = &'a FilteredSimplex>,
    top: usize,
) -> Vec<Vec<&'a FilteredSimplex>> {
    let mut by_dim: Vec<Vec<&FilteredSimplex>> = vec![Vec::new(); top + 1];
    for s in simplices {
        if s.dim() <= top {
            by_dim[s.dim()].push(s);
        }
    }
    by_dim
}

fn boundary(s: &FilteredSimplex, facets: &HashMap<&[usize], usize>) -> BitColumn {
    let mut col = BitColumn::default();
    let mut face = Vec::with_capacity(s.vertices.len() - 1);
    for skip in 0..s.vertices.len() {
        face.clear();
        face.extend(s.vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v));
        let idx = facets.get(face.as_slice()).expect("complex is closed under faces");
        col.toggle(*idx);
    }
    col
}

/// Barcodes for `q = 0..=max_q` by column reduction of the boundary matrix.
pub fn persistence(complex: &FilteredComplex, max_q: usize) -> Result<Vec<Barcode>> {
    if max_q + 1 > complex.max_dim {
        return Err(invalid(format!(
            "barcodes up to q={max_q} need simplices of dimension {}",
            max_q + 1
        )));
    }
    if let Some(pos) = complex
        .simplices
        .windows(2)
        .position(|w| w[0].value > w[1].value || w[0].vertices.len() > w[1].vertices.len() && w[0].value == w[1].value)
    {
        return Err(Error::UnsortedFiltration { position: pos + 1 });
    }
    persistence_of_sorted(&complex.simplices, max_q)
}

/// Persistence of simplices already in filtration order.
pub fn persistence_of_sorted(simplices: &[FilteredSimplex], max_q: usize) -> Result<Vec<Barcode>> {
    let by_dim = split_by_dim(simplices.iter(), max_q + 1);
    let index: Vec<HashMap<&[usize], usize>> = by_dim
        .iter()
        .map(|list| list.iter().enumerate().map(|(i, s)| (s.vertices.as_slice(), i)).collect())
        .collect();
    let mut bars: Vec<Barcode> = (0..=max_q).map(|q| Barcode { q, intervals: Vec::new() }).collect();
    // killed[q][i]: the q-simplex i is the pivot of some (q+1)-column
    let mut killed: Vec<Vec<bool>> = by_dim.iter().map(|l| vec![false; l.len()]).collect();
    let mut creator: Vec<Vec<bool>> = by_dim.iter().map(|l| vec![false; l.len()]).collect();
    creator[0].iter_mut().for_each(|c| *c = true);
    for q in 1..=max_q + 1 {
        let mut pivots: HashMap<usize, BitColumn> = HashMap::new();
        for (col_idx, s) in by_dim[q].iter().enumerate() {
            let facets = &index[q - 1];
            let mut col = boundary_checked(s, facets)?;
            while let Some(low) = col.highest() {
                match pivots.get(&low) {
                    Some(prev) => col.xor_assign(prev),
                    None => break,
                }
            }
            match col.highest() {
                None => creator[q][col_idx] = true,
                Some(low) => {
                    killed[q - 1][low] = true;
                    let birth = by_dim[q - 1][low].value;
                    if birth < s.value {
                        bars[q - 1].intervals.push((birth, s.value));
                    }
                    pivots.insert(low, col);
                }
            }
        }
    }
    for q in 0..=max_q {
        for (i, s) in by_dim[q].iter().enumerate() {
            if creator[q][i] && !killed[q][i] {
                bars[q].intervals.push((s.value, f64::INFINITY));
            }
        }
        bars[q].intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    Ok(bars)
}

fn boundary_checked(s: &FilteredSimplex, facets: &HashMap<&[usize], usize>) -> Result<BitColumn> {
    let mut col = BitColumn::default();
    let mut face = Vec::with_capacity(s.vertices.len() - 1);
    for skip in 0..s.vertices.len() {
        face.clear();
        face.extend(s.vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v));
        match facets.get(face.as_slice()) {
            Some(&idx) => col.toggle(idx),
            None => return Err(invalid(format!("face {face:?} of {:?} is missing", s.vertices))),
        }
    }
    Ok(col)
}

/// A connected component of `Č(𝒫_n, s_n t)` with its `k`-th Betti number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentBetti {
    /// Sorted point indices of the component.
    pub vertices: Vec<usize>,
    pub betti: usize,
}

impl ComponentBetti {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

/// Connected components of the graph with edges of length `<= radius`,
/// each as a sorted vertex list, ordered by smallest vertex.
pub fn components(cloud: &PointCloud, edges: &[Edge], radius: f64) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(cloud.len());
    for e in edges.iter().filter(|e| e.length <= radius) {
        uf.union(e.i, e.j);
    }
    let labels = uf.labels();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, l) in labels.into_iter().enumerate() {
        groups[l].push(v);
    }
    groups
}

/// `(i, j)` per component: size and `β_k` of its Čech complex at `s_n t`.
pub fn component_betti(cloud: &PointCloud, t: f64, k: usize) -> Result<Vec<(usize, usize)>> {
    Ok(component_census_records(cloud, t, k, crate::cechcore::DEFAULT_SIMPLEX_BUDGET)?
        .into_iter()
        .map(|c| (c.size(), c.betti))
        .collect())
}

/// Per-component records, with vertex lists kept for region restriction.
pub fn component_census_records(
    cloud: &PointCloud,
    t: f64,
    k: usize,
    budget: usize,
) -> Result<Vec<ComponentBetti>> {
    let d = cloud.dim();
    if k < 1 || k >= d {
        return Err(Error::DegreeOutOfRange { k, d });
    }
    let radius = cloud.scale * t;
    let edges = edges_within(d, cloud.coords(), radius);
    let groups = components(cloud, &edges, radius);
    let mut local_edges: Vec<Vec<Edge>> = vec![Vec::new(); groups.len()];
    let mut owner = vec![(0usize, 0usize); cloud.len()];
    for (g, members) in groups.iter().enumerate() {
        for (local, &v) in members.iter().enumerate() {
            owner[v] = (g, local);
        }
    }
    for e in &edges {
        let (g, a) = owner[e.i];
        let (_, b) = owner[e.j];
        local_edges[g].push(Edge { i: a.min(b), j: a.max(b), length: e.length });
    }
    groups
        .into_par_iter()
        .zip(local_edges)
        .map(|(members, edges)| {
            let betti = if members.len() < k + 2 {
                0
            } else {
                let coords: Vec<f64> = members.iter().flat_map(|&v| cloud.point(v).iter().copied()).collect();
                let simplices = simplices_from_edges(d, &coords, &edges, k + 1, radius, budget)?;
                betti_of_simplices(&simplices, radius, k).get(k)
            };
            Ok(ComponentBetti { vertices: members, betti })
        })
        .collect()
}

/// Writes `q,birth,death` rows, `inf` for essential classes.
pub fn write_barcodes_csv<W: Write>(barcodes: &[Barcode], mut w: W) -> Result<()> {
    writeln!(w, "q,birth,death")?;
    for bc in barcodes {
        for (b, d) in &bc.intervals {
            if d.is_finite() {
                writeln!(w, "{},{},{}", bc.q, b, d)?;
            } else {
                writeln!(w, "{},{},inf", bc.q, b)?;
            }
        }
    }
    Ok(())
}

pub fn read_barcodes_csv<R: BufRead>(r: R) -> Result<Vec<Barcode>> {
    let mut bars: Vec<Barcode> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("q,") {
            continue;
        }
        let bad = |m: &str| Error::Parse { line: lineno + 1, message: m.to_string() };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad("expected q,birth,death"));
        }
        let q: usize = f[0].parse().map_err(|_| bad("bad q"))?;
        let birth: f64 = f[1].parse().map_err(|_| bad("bad birth"))?;
        let death: f64 = f[2].parse().map_err(|_| bad("bad death"))?;
        while bars.len() <= q {
            bars.push(Barcode { q: bars.len(), intervals: Vec::new() });
        }
        bars[q].intervals.push((birth, death));
    }
    Ok(bars)
}

/// Standalone mode: complex CSV in, barcode CSV out.
pub fn barcodes_from_complex_csv<R: BufRead, W: Write>(input: R, output: W, max_q: Option<usize>) -> Result<Vec<Barcode>> {
    let complex = FilteredComplex::read_csv(input)?;
    let max_q = max_q.unwrap_or(complex.max_dim.saturating_sub(1));
    let bars = persistence(&complex, max_q)?;
    write_barcodes_csv(&bars, output)?;
    Ok(bars)
}
