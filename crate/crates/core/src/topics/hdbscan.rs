use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{ClusterConfig, TopicId};

/// Flat cluster labels (`None` = noise) and membership strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<Option<TopicId>>,
    pub probabilities: Vec<f64>,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().flatten().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance to the `k`-th nearest other point (capped at `n - 1`).
pub fn core_distances(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    points
        .par_iter()
        .map(|p| {
            let mut d: Vec<f64> = points.iter().map(|q| euclidean(p, q)).collect();
            // Index 0 of the sorted distances is the point itself.
            let k = k.min(d.len() - 1);
            *d.select_nth_unstable_by(k, f64::total_cmp).1
        })
        .collect()
}

/// Minimum spanning tree of the mutual-reachability graph (Prim, dense).
/// Returns edges `(u, v, weight)` sorted by `(weight, min(u,v), max(u,v))`.
fn mst(points: &[Vec<f64>], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let (cp, cc) = (&points[current], core[current]);
        let updates: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .filter(|&v| !in_tree[v])
            .map(|v| (v, euclidean(cp, &points[v]).max(cc).max(core[v])))
            .collect();
        for (v, d) in updates {
            let key = (d, current.min(v), current.max(v));
            let old = (best[v], parent[v].min(v), parent[v].max(v));
            if key.0 < old.0 || (key.0 == old.0 && (key.1, key.2) < (old.1, old.2)) {
                best[v] = d;
                parent[v] = current;
            }
        }
        // Minimum crossing edge under (weight, lower id, higher id).
        let edge_key = |v: usize| (best[v], parent[v].min(v), parent[v].max(v));
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| {
                let (ka, kb) = (edge_key(a), edge_key(b));
                ka.0.total_cmp(&kb.0).then((ka.1, ka.2).cmp(&(kb.1, kb.2)))
            })
            .expect("vertices remain");
        in_tree[next] = true;
        edges.push((parent[next], next, best[next]));
        current = next;
    }
    edges.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then(a.0.min(a.1).cmp(&b.0.min(b.1)))
            .then(a.0.max(a.1).cmp(&b.0.max(b.1)))
    });
    edges
}

/// Single-linkage dendrogram: node `n + i` merges `left`, `right` at `dist`.
struct Dendrogram {
    n: usize,
    merges: Vec<(usize, usize, f64, usize)>,
}

impl Dendrogram {
    fn from_mst(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut parent: Vec<usize> = (0..2 * n).collect();
        let mut size = vec![1usize; 2 * n];
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for (i, &(u, v, d)) in edges.iter().enumerate() {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            let node = n + i;
            parent[ru] = node;
            parent[rv] = node;
            size[node] = size[ru] + size[rv];
            merges.push((ru, rv, d, size[node]));
        }
        Dendrogram { n, merges }
    }

    fn size(&self, node: usize) -> usize {
        if node < self.n {
            1
        } else {
            self.merges[node - self.n].3
        }
    }

    fn leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                let (l, r, _, _) = self.merges[x - self.n];
                stack.push(r);
                stack.push(l);
            }
        }
    }
}

/// Smallest distance used when converting to density `1 / d`.
const MIN_DISTANCE: f64 = 1e-280;

fn lambda(d: f64) -> f64 {
    1.0 / d.max(MIN_DISTANCE)
}

/// Condensed tree row: `child` is a point (`< n`) or a cluster id (`>= n`).
#[derive(Debug, Clone, Copy)]
struct CondensedRow {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn condense(tree: &Dendrogram, min_cluster_size: usize) -> Vec<CondensedRow> {
    let n = tree.n;
    let root = n + tree.merges.len() - 1;
    let mut rows = Vec::new();
    let mut next_cluster = n + 1;
    // (dendrogram node, cluster label it belongs to)
    let mut stack = vec![(root, n)];
    let mut leaves = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        if node < n {
            continue;
        }
        let (left, right, d, _) = tree.merges[node - n];
        let lam = lambda(d);
        let (ls, rs) = (tree.size(left), tree.size(right));
        let (big_l, big_r) = (ls >= min_cluster_size, rs >= min_cluster_size);
        if big_l && big_r {
            for (child, size) in [(left, ls), (right, rs)] {
                rows.push(CondensedRow {
                    parent: cluster,
                    child: next_cluster,
                    lambda: lam,
                    size,
                });
                stack.push((child, next_cluster));
                next_cluster += 1;
            }
        } else {
            for (child, big) in [(left, big_l), (right, big_r)] {
                if big {
                    stack.push((child, cluster));
                } else {
                    leaves.clear();
                    tree.leaves(child, &mut leaves);
                    for &p in &leaves {
                        rows.push(CondensedRow {
                            parent: cluster,
                            child: p,
                            lambda: lam,
                            size: 1,
                        });
                    }
                }
            }
        }
    }
    rows
}

/// HDBSCAN with excess-of-mass cluster selection on Euclidean points.
pub fn hdbscan(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<Clustering> {
    cfg.validate()?;
    let n = points.len();
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coordinate in clustering input".into()));
    }
    if n < cfg.min_cluster_size {
        return Ok(Clustering {
            labels: vec![None; n],
            probabilities: vec![0.0; n],
        });
    }
    let core = core_distances(points, cfg.min_samples());
    let tree = Dendrogram::from_mst(n, &mst(points, &core));
    let rows = condense(&tree, cfg.min_cluster_size);

    let root = n;
    let n_clusters = rows.iter().map(|r| r.child + 1).filter(|&c| c > n).max().unwrap_or(n + 1) - n;
    let idx = |c: usize| c - n;
    let mut birth = vec![0.0f64; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for r in rows.iter().filter(|r| r.child >= n) {
        birth[idx(r.child)] = r.lambda;
        children[idx(r.parent)].push(r.child);
    }
    let mut stability = vec![0.0f64; n_clusters];
    let mut max_lambda = vec![0.0f64; n_clusters];
    for r in &rows {
        let p = idx(r.parent);
        stability[p] += (r.lambda - birth[p]) * r.size as f64;
        max_lambda[p] = max_lambda[p].max(r.lambda);
    }

    // Excess of mass, leaves upward; children always have larger ids.
    let mut selected = vec![false; n_clusters];
    let mut subtree = stability.clone();
    for c in (1..n_clusters).rev() {
        if children[c].is_empty() {
            selected[c] = true;
            continue;
        }
        let below: f64 = children[c].iter().map(|&k| subtree[idx(k)]).sum();
        if stability[c] >= below {
            selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(k) = stack.pop() {
                selected[idx(k)] = false;
                stack.extend(children[idx(k)].iter().copied());
            }
        } else {
            subtree[c] = below;
        }
    }
    // Without any split the whole set is one cluster.
    if children[0].is_empty() {
        selected[0] = true;
    }

    // Each point: the selected ancestor of the cluster it fell out of.
    let mut parent_of = vec![usize::MAX; n_clusters];
    for r in rows.iter().filter(|r| r.child >= n) {
        parent_of[idx(r.child)] = r.parent;
    }
    let owner = |mut c: usize| -> Option<usize> {
        loop {
            if selected[idx(c)] {
                return Some(c);
            }
            if c == root {
                return None;
            }
            c = parent_of[idx(c)];
        }
    };

    let mut raw_label = vec![None; n];
    let mut probabilities = vec![0.0; n];
    for r in rows.iter().filter(|r| r.child < n) {
        if let Some(c) = owner(r.parent) {
            let max = max_lambda[idx(c)];
            raw_label[r.child] = Some(c);
            probabilities[r.child] = if max > 0.0 { r.lambda.min(max) / max } else { 1.0 };
        }
    }

    // Number clusters by their first member in row order.
    let mut relabel = std::collections::HashMap::new();
    let labels = raw_label
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = relabel.len() as TopicId;
                *relabel.entry(c).or_insert(next)
            })
        })
        .collect();
    Ok(Clustering { labels, probabilities })
}
