//! Bottleneck and Wasserstein distances between persistence diagrams.
//!
//! Both use the L∞ ground metric on the plane. A point may be matched to its
//! projection onto the diagonal at cost `(death - birth) / 2`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homology::PersistenceDiagram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagramDistanceConfig {
    pub wasserstein_order: f64,
}

impl Default for DiagramDistanceConfig {
    fn default() -> Self {
        DiagramDistanceConfig { wasserstein_order: 1.0 }
    }
}

impl DiagramDistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wasserstein_order >= 1.0) || !self.wasserstein_order.is_finite() {
            return Err(Error::Config(format!(
                "wasserstein_order must be a finite value >= 1 (got {})",
                self.wasserstein_order
            )));
        }
        Ok(())
    }
}

fn check(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::Domain(format!("diagram dimensions differ: {} vs {}", a.dim, b.dim)));
    }
    for &(x, y) in a.points.iter().chain(&b.points) {
        if !x.is_finite() || !y.is_finite() || y < x {
            return Err(Error::Domain(format!("invalid diagram point ({x}, {y})")));
        }
    }
    Ok(())
}

/// Off-diagonal points only; zero-persistence points match the diagonal for free.
fn proper(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().copied().filter(|p| p.1 > p.0).collect()
}

fn linf(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn to_diagonal(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Cost matrix of the augmented problem. Rows are `a` then diagonal copies
/// of `b`; columns are `b` then diagonal copies of `a`. `None` = forbidden.
struct Augmented {
    a: Vec<(f64, f64)>,
    b: Vec<(f64, f64)>,
}

impl Augmented {
    fn size(&self) -> usize {
        self.a.len() + self.b.len()
    }

    fn cost(&self, i: usize, j: usize) -> Option<f64> {
        let (n, m) = (self.a.len(), self.b.len());
        match (i < n, j < m) {
            (true, true) => Some(linf(self.a[i], self.b[j])),
            (true, false) => (j - m == i).then(|| to_diagonal(self.a[i])),
            (false, true) => (i - n == j).then(|| to_diagonal(self.b[j])),
            (false, false) => Some(0.0),
        }
    }
}

pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<f64> {
    check(a, b)?;
    Ok(bottleneck_points(&a.points, &b.points))
}

/// Bottleneck distance between two point sets (points assumed valid).
pub fn bottleneck_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let aug = Augmented {
        a: proper(a),
        b: proper(b),
    };
    let size = aug.size();
    if size == 0 {
        return 0.0;
    }
    let (n, m) = (aug.a.len(), aug.b.len());
    let mut candidates: Vec<f64> = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .filter(|&(i, j)| i < n || j < m)
        .filter_map(|(i, j)| aug.cost(i, j))
        .collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Matching every point to the diagonal is always feasible.
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_within(&aug, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn perfect_matching_within(aug: &Augmented, threshold: f64) -> bool {
    let size = aug.size();
    let adj: Vec<Vec<usize>> = (0..size)
        .map(|i| (0..size).filter(|&j| aug.cost(i, j).is_some_and(|c| c <= threshold)).collect())
        .collect();
    hopcroft_karp(&adj, size) == size
}

/// Maximum bipartite matching size; `adj[u]` lists right vertices of left `u`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    const NIL: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut matched = 0;

    loop {
        // Layered BFS from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == NIL && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it) {
                matched += 1;
            }
        }
    }
}

fn augment(
    root: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    // Iterative DFS along the BFS layers.
    let mut stack = vec![root];
    while let Some(&u) = stack.last() {
        if it[u] == adj[u].len() {
            dist[u] = usize::MAX;
            stack.pop();
            continue;
        }
        let v = adj[u][it[u]];
        it[u] += 1;
        let w = match_r[v];
        if w == usize::MAX {
            // Flip the path.
            let mut v = v;
            for &x in stack.iter().rev() {
                let prev = match_l[x];
                match_l[x] = v;
                match_r[v] = x;
                v = prev;
            }
            return true;
        }
        if dist[w] == dist[u] + 1 {
            stack.push(w);
        }
    }
    false
}

pub fn wasserstein(a: &PersistenceDiagram, b: &PersistenceDiagram, cfg: &DiagramDistanceConfig) -> Result<f64> {
    cfg.validate()?;
    check(a, b)?;
    Ok(wasserstein_points(&a.points, &b.points, cfg.wasserstein_order))
}

/// Order-`p` Wasserstein distance between two point sets (points assumed valid).
pub fn wasserstein_points(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let aug = Augmented {
        a: proper(a),
        b: proper(b),
    };
    let size = aug.size();
    if size == 0 {
        return 0.0;
    }
    let power = |c: f64| if p == 1.0 { c } else { c.powf(p) };
    let cost: Vec<f64> = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .map(|(i, j)| aug.cost(i, j).map_or(f64::INFINITY, power))
        .collect();
    let assignment = hungarian(size, &cost);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| power(aug.cost(i, j).expect("optimal assignment uses allowed pairs")))
        .sum();
    if p == 1.0 {
        total
    } else {
        total.powf(1.0 / p)
    }
}

/// Minimum-cost perfect assignment on a square row-major matrix (rows to
/// columns). Infinite entries are forbidden; a finite assignment must exist.
fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    // Potentials-based shortest augmenting path, 1-indexed with a virtual
    // row/column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}
