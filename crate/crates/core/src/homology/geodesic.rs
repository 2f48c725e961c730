use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::DistanceMatrix;
use crate::error::{Error, Result};

struct Dist(f64);

impl PartialEq for Dist {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// All-pairs weighted shortest paths over `n` vertices and undirected
/// `(u, v, distance)` edges.
///
/// Pairs in different components get the sentinel `1 + max finite geodesic`,
/// so every component eventually merges in a Rips filtration.
pub fn geodesic_distances(n: usize, edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
    if n == 0 {
        return Err(Error::Domain("geodesic distances of an empty graph".into()));
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        if u >= n || v >= n {
            return Err(Error::Domain(format!("edge ({u}, {v}) out of range for {n} vertices")));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!("edge ({u}, {v}) has invalid distance {w}")));
        }
        adj[u].push((v, w));
        adj[v].push((u, w));
    }

    let mut d = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let row = &mut d[s * n..(s + 1) * n];
        row[s] = 0.0;
        heap.push(Reverse((Dist(0.0), s)));
        while let Some(Reverse((Dist(du), u))) = heap.pop() {
            if du > row[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = du + w;
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(Reverse((Dist(nd), v)));
                }
            }
        }
    }

    // Summation order differs between the two directions; keep the smaller.
    for i in 0..n {
        for j in i + 1..n {
            let m = d[i * n + j].min(d[j * n + i]);
            d[i * n + j] = m;
            d[j * n + i] = m;
        }
    }

    let max_finite = d.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let sentinel = 1.0 + max_finite;
    let mut sentinel_used = false;
    for v in d.iter_mut() {
        if v.is_infinite() {
            *v = sentinel;
            sentinel_used = true;
        }
    }
    DistanceMatrix::with_sentinel(n, d, sentinel_used)
}
