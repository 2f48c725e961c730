//! Vietoris-Rips persistence by implicit cohomology reduction.
//!
//! Simplices are never stored explicitly: a k-simplex with vertices
//! `v_k > ... > v_0` is identified by its combinatorial-number-system index
//! `sum C(v_i, i + 1)`, and coboundaries are enumerated on the fly from that
//! index. Dimension 0 is handled by union-find over the edges. Higher
//! dimensions reduce the coboundary matrix column by column in reverse
//! filtration order with three shortcuts:
//!
//! * clearing: a simplex that is already the pivot of a lower-dimensional
//!   column cannot be a cocycle and is never reduced;
//! * emergent pairs: if the first cofacet of equal diameter is not yet a
//!   pivot, the column is already reduced and no heap is built;
//! * truncation at the enclosing radius, beyond which the complex is a cone.
//!
//! Filtration order is by diameter, ties broken by descending simplex index
//! (the reverse of the column processing order). Coefficients are in Z/2.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use super::{DistanceMatrix, PersistenceDiagram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipsOptions {
    /// Highest homology dimension computed.
    pub max_dim: usize,
    /// Largest simplex diameter admitted. `None` uses the enclosing radius,
    /// which loses no finite feature.
    pub threshold: Option<f64>,
}

impl Default for RipsOptions {
    fn default() -> Self {
        RipsOptions {
            max_dim: 2,
            threshold: None,
        }
    }
}

/// `min_i max_j d(i, j)`; zero for fewer than two points.
pub fn enclosing_radius(dm: &DistanceMatrix) -> f64 {
    let n = dm.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .map(|i| (0..n).map(|j| dm.get(i, j)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Diagrams for dimensions `0..=max_dim`, zero-persistence pairs dropped and
/// the single essential H0 class counted in `essential_excluded`.
pub fn rips_persistence(dm: &DistanceMatrix, max_dim: usize) -> Result<Vec<PersistenceDiagram>> {
    rips_persistence_with(
        dm,
        RipsOptions {
            max_dim,
            threshold: None,
        },
    )
}

pub fn rips_persistence_with(dm: &DistanceMatrix, opts: RipsOptions) -> Result<Vec<PersistenceDiagram>> {
    if opts.max_dim > 2 {
        return Err(Error::Domain(format!("homology above dimension 2 is not supported (got {})", opts.max_dim)));
    }
    let threshold = opts.threshold.unwrap_or_else(|| enclosing_radius(dm));
    let engine = Engine::new(dm, threshold, opts.max_dim)?;
    Ok(engine.run())
}

/// C(n, k) for n < `n_max`, k <= `k_max`.
struct Binomials {
    stride: usize,
    table: Vec<u64>,
}

impl Binomials {
    fn new(n_max: usize, k_max: usize) -> Result<Self> {
        let stride = n_max + 1;
        let mut table = vec![0u64; (k_max + 1) * stride];
        for n in 0..=n_max {
            table[n] = 1;
            for k in 1..=k_max.min(n) {
                let above = if k == n { 0 } else { table[k * stride + n - 1] };
                table[k * stride + n] = table[(k - 1) * stride + n - 1]
                    .checked_add(above)
                    .ok_or_else(|| Error::Domain(format!("{n_max} points overflow simplex indices")))?;
            }
        }
        Ok(Binomials { stride, table })
    }

    #[inline]
    fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[k * self.stride + n]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    diam: f64,
    index: u64,
}

// Heap order: the top is the pivot, i.e. the earliest simplex in the
// filtration (smallest diameter, then largest index).
impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .diam
            .total_cmp(&self.diam)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Column processing order: decreasing diameter, then increasing index.
fn column_order(a: &Entry, b: &Entry) -> Ordering {
    b.diam.total_cmp(&a.diam).then(a.index.cmp(&b.index))
}

struct Engine<'a> {
    dm: &'a DistanceMatrix,
    n: usize,
    threshold: f64,
    max_dim: usize,
    binom: Binomials,
}

/// Reduced columns stored back to back; `offsets[i]..offsets[i + 1]` are the
/// extra simplices whose coboundaries column `i` absorbed.
#[derive(Default)]
struct ReductionMatrix {
    offsets: Vec<usize>,
    entries: Vec<Entry>,
}

impl ReductionMatrix {
    fn new() -> Self {
        ReductionMatrix {
            offsets: vec![0],
            entries: Vec::new(),
        }
    }

    fn push_column(&mut self, mut col: Vec<Entry>) {
        // Z/2: entries appearing an even number of times cancel.
        col.sort_unstable_by_key(|e| e.index);
        let mut i = 0;
        while i < col.len() {
            let mut j = i;
            while j < col.len() && col[j].index == col[i].index {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                self.entries.push(col[i]);
            }
            i = j;
        }
        self.offsets.push(self.entries.len());
    }

    fn column(&self, i: usize) -> &[Entry] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

impl<'a> Engine<'a> {
    fn new(dm: &'a DistanceMatrix, threshold: f64, max_dim: usize) -> Result<Self> {
        let n = dm.len();
        Ok(Engine {
            dm,
            n,
            threshold,
            max_dim,
            binom: Binomials::new(n.max(1), max_dim + 2)?,
        })
    }

    fn run(&self) -> Vec<PersistenceDiagram> {
        let mut diagrams: Vec<PersistenceDiagram> = (0..=self.max_dim).map(PersistenceDiagram::empty).collect();
        if self.n == 0 {
            return diagrams;
        }
        let (mut columns, mut simplices) = self.dim0(&mut diagrams[0]);
        for dim in 1..=self.max_dim {
            let mut pivots = FxHashMap::default();
            pivots.reserve(columns.len());
            self.compute_pairs(&columns, &mut pivots, dim, &mut diagrams[dim]);
            if dim < self.max_dim {
                let (next_cols, next_simplices) = self.assemble(&simplices, &pivots, dim);
                columns = next_cols;
                simplices = next_simplices;
            }
        }
        diagrams
    }

    /// Largest `v <= top` with `C(v, k) <= idx`.
    fn max_vertex(&self, idx: u64, k: usize, top: usize) -> usize {
        let (mut lo, mut hi) = (k - 1, top);
        if self.binom.get(hi, k) <= idx {
            return hi;
        }
        // Invariant: C(lo, k) <= idx < C(hi, k).
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.binom.get(mid, k) <= idx {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn vertices(&self, mut idx: u64, dim: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut top = self.n - 1;
        for k in (1..=dim + 1).rev() {
            let v = self.max_vertex(idx, k, top);
            out.push(v);
            idx -= self.binom.get(v, k);
            top = v.saturating_sub(1).max(k.saturating_sub(2));
        }
    }

    fn dim0(&self, h0: &mut PersistenceDiagram) -> (Vec<Entry>, Vec<Entry>) {
        let n = self.n;
        let mut edges = Vec::new();
        for i in 1..n {
            for j in 0..i {
                let diam = self.dm.get(i, j);
                if diam <= self.threshold {
                    edges.push(Entry {
                        diam,
                        index: self.binom.get(i, 2) + j as u64,
                    });
                }
            }
        }
        // Filtration order: ascending diameter, ties by descending index.
        let mut sorted = edges.clone();
        sorted.sort_unstable_by(|a, b| column_order(b, a));

        let mut parent: Vec<usize> = (0..n).collect();
        let mut rank = vec![0u8; n];
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut columns = Vec::new();
        let mut verts = Vec::with_capacity(2);
        for e in &sorted {
            self.vertices(e.index, 1, &mut verts);
            let (ru, rv) = (find(&mut parent, verts[0]), find(&mut parent, verts[1]));
            if ru != rv {
                match rank[ru].cmp(&rank[rv]) {
                    Ordering::Less => parent[ru] = rv,
                    Ordering::Greater => parent[rv] = ru,
                    Ordering::Equal => {
                        parent[rv] = ru;
                        rank[ru] += 1;
                    }
                }
                if e.diam > 0.0 {
                    h0.points.push((0.0, e.diam));
                }
            } else {
                columns.push(*e);
            }
        }
        columns.reverse();
        h0.essential_excluded = (0..n).filter(|&v| find(&mut parent, v) == v).count();
        (columns, edges)
    }

    /// Cofacets of `simplex` (dimension `dim`) in decreasing index order.
    /// With `all == false`, only cofacets adding a vertex above the
    /// simplex's top vertex are produced, so each cofacet is generated from
    /// exactly one facet.
    fn for_each_cofacet(&self, simplex: Entry, dim: usize, all: bool, verts: &mut Vec<usize>, mut f: impl FnMut(Entry) -> bool) {
        self.vertices(simplex.index, dim, verts);
        let mut idx_below = simplex.index;
        let mut idx_above = 0u64;
        let mut j = self.n as isize - 1;
        let mut k = dim + 1;
        loop {
            if j < k as isize {
                return;
            }
            if !all && self.binom.get(j as usize, k) <= idx_below {
                return;
            }
            while k > 0 && self.binom.get(j as usize, k) <= idx_below {
                idx_below -= self.binom.get(j as usize, k);
                idx_above += self.binom.get(j as usize, k + 1);
                j -= 1;
                k -= 1;
            }
            if j < 0 {
                return;
            }
            let ju = j as usize;
            let mut diam = simplex.diam;
            for &v in verts.iter() {
                diam = diam.max(self.dm.get(ju, v));
            }
            let index = idx_above + self.binom.get(ju, k + 1) + idx_below;
            j -= 1;
            if !f(Entry { diam, index }) {
                return;
            }
        }
    }

    fn assemble(&self, simplices: &[Entry], pivots: &FxHashMap<u64, usize>, dim: usize) -> (Vec<Entry>, Vec<Entry>) {
        let mut columns = Vec::new();
        let mut next = Vec::new();
        let mut verts = Vec::with_capacity(dim + 2);
        for &s in simplices {
            self.for_each_cofacet(s, dim, false, &mut verts, |c| {
                if c.diam <= self.threshold {
                    next.push(c);
                    if !pivots.contains_key(&c.index) {
                        columns.push(c);
                    }
                }
                true
            });
        }
        columns.sort_unstable_by(column_order);
        (columns, next)
    }

    fn pop_pivot(heap: &mut BinaryHeap<Entry>) -> Option<Entry> {
        while let Some(top) = heap.pop() {
            let mut count = 1;
            while heap.peek().is_some_and(|e| e.index == top.index) {
                heap.pop();
                count += 1;
            }
            if count % 2 == 1 {
                return Some(top);
            }
        }
        None
    }

    fn get_pivot(heap: &mut BinaryHeap<Entry>) -> Option<Entry> {
        let p = Self::pop_pivot(heap);
        if let Some(p) = p {
            heap.push(p);
        }
        p
    }

    fn push_coboundary(&self, simplex: Entry, dim: usize, heap: &mut BinaryHeap<Entry>, verts: &mut Vec<usize>) {
        self.for_each_cofacet(simplex, dim, true, verts, |c| {
            if c.diam <= self.threshold {
                heap.push(c);
            }
            true
        });
    }

    fn init_pivot(
        &self,
        column: Entry,
        dim: usize,
        heap: &mut BinaryHeap<Entry>,
        pivots: &FxHashMap<u64, usize>,
        buf: &mut Vec<Entry>,
        verts: &mut Vec<usize>,
    ) -> Option<Entry> {
        buf.clear();
        let mut check_emergent = true;
        let mut emergent = None;
        self.for_each_cofacet(column, dim, true, verts, |c| {
            if c.diam > self.threshold {
                return true;
            }
            buf.push(c);
            if check_emergent && c.diam == column.diam {
                if !pivots.contains_key(&c.index) {
                    emergent = Some(c);
                    return false;
                }
                check_emergent = false;
            }
            true
        });
        if emergent.is_some() {
            return emergent;
        }
        heap.extend(buf.iter().copied());
        Self::get_pivot(heap)
    }

    fn compute_pairs(&self, columns: &[Entry], pivots: &mut FxHashMap<u64, usize>, dim: usize, out: &mut PersistenceDiagram) {
        let mut reduction = ReductionMatrix::new();
        let mut heap = BinaryHeap::new();
        let mut buf = Vec::new();
        let mut verts = Vec::with_capacity(dim + 2);
        for (i, &column) in columns.iter().enumerate() {
            heap.clear();
            let mut working = Vec::new();
            let mut pivot = self.init_pivot(column, dim, &mut heap, pivots, &mut buf, &mut verts);
            loop {
                match pivot {
                    Some(p) => match pivots.get(&p.index) {
                        Some(&j) => {
                            let other = columns[j];
                            working.push(other);
                            self.push_coboundary(other, dim, &mut heap, &mut verts);
                            for &e in reduction.column(j) {
                                working.push(e);
                                self.push_coboundary(e, dim, &mut heap, &mut verts);
                            }
                            pivot = Self::get_pivot(&mut heap);
                        }
                        None => {
                            if p.diam > column.diam {
                                out.points.push((column.diam, p.diam));
                            }
                            pivots.insert(p.index, i);
                            break;
                        }
                    },
                    None => {
                        out.essential_excluded += 1;
                        break;
                    }
                }
            }
            reduction.push_column(working);
        }
    }
}
