//! Neighborhood graphs via a uniform spatial grid, and union-find.

use std::collections::HashMap;

/// An undirected edge `i < j` with its Euclidean length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

/// Bucket grid over a flat coordinate buffer.
pub struct CellGrid<'a> {
    dim: usize,
    coords: &'a [f64],
    side: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> CellGrid<'a> {
    /// Cells slightly wider than `radius`, so every neighbor within
    /// `radius` sits in an adjacent cell despite rounding.
    pub fn new(dim: usize, coords: &'a [f64], radius: f64) -> Self {
        let side = radius * (1.0 + 1e-9);
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (idx, p) in coords.chunks_exact(dim).enumerate() {
            cells.entry(cell_of(p, side)).or_default().push(idx);
        }
        Self { dim, coords, side, cells }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// All pairs at distance `<= radius`, sorted by `(i, j)`.
    pub fn edges_within(&self, radius: f64) -> Vec<Edge> {
        let r2 = radius * radius;
        let mut edges = Vec::new();
        let mut push_pairs = |a: &[usize], b: &[usize], same: bool| {
            for (ai, &i) in a.iter().enumerate() {
                let rest = if same { &b[ai + 1..] } else { b };
                for &j in rest {
                    let d2: f64 = self.point(i).iter().zip(self.point(j)).map(|(x, y)| (x - y) * (x - y)).sum();
                    if d2 <= r2 {
                        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                        edges.push(Edge { i: lo, j: hi, length: d2.sqrt() });
                    }
                }
            }
        };
        // Visit each unordered pair of adjacent cells once.
        let neighborhood = 3usize.saturating_pow(self.dim as u32);
        if neighborhood <= self.cells.len() {
            let mut offset = vec![0i64; self.dim];
            let mut key = vec![0i64; self.dim];
            for (cell, members) in &self.cells {
                offset.iter_mut().for_each(|o| *o = -1);
                loop {
                    for a in 0..self.dim {
                        key[a] = cell[a] + offset[a];
                    }
                    if let Some(other) = self.cells.get(key.as_slice()) {
                        match key.as_slice().cmp(cell.as_slice()) {
                            std::cmp::Ordering::Equal => push_pairs(members, other, true),
                            std::cmp::Ordering::Greater => push_pairs(members, other, false),
                            std::cmp::Ordering::Less => {}
                        }
                    }
                    if !advance(&mut offset) {
                        break;
                    }
                }
            }
        } else {
            let occupied: Vec<(&Vec<i64>, &Vec<usize>)> = self.cells.iter().collect();
            for (x, (ca, ma)) in occupied.iter().enumerate() {
                push_pairs(ma, ma, true);
                for (cb, mb) in &occupied[x + 1..] {
                    if ca.iter().zip(cb.iter()).all(|(p, q)| (p - q).abs() <= 1) {
                        push_pairs(ma, mb, false);
                    }
                }
            }
        }
        edges.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        edges
    }

    pub fn cell_side(&self) -> f64 {
        self.side
    }
}

fn cell_of(p: &[f64], side: f64) -> Vec<i64> {
    p.iter().map(|v| (v / side).floor() as i64).collect()
}

/// Odometer over `{-1, 0, 1}^d`; false once it wraps.
fn advance(offset: &mut [i64]) -> bool {
    for o in offset.iter_mut() {
        if *o < 1 {
            *o += 1;
            return true;
        }
        *o = -1;
    }
    false
}

/// Pairs of points at distance `<= radius`, sorted by `(i, j)`.
pub fn edges_within(dim: usize, coords: &[f64], radius: f64) -> Vec<Edge> {
    if coords.is_empty() || !(radius > 0.0) {
        return Vec::new();
    }
    CellGrid::new(dim, coords, radius).edges_within(radius)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n], components: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    /// Component label per element, numbered by first appearance.
    pub fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label = vec![usize::MAX; n];
        let mut out = vec![0; n];
        let mut next = 0;
        for x in 0..n {
            let r = self.find(x);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out[x] = label[r];
        }
        out
    }
}
