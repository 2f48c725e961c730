//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use infogap_core::homology::{DistanceMatrix, PersistenceDiagram};
use rand::Rng;

/// Persistence by explicit boundary-matrix reduction over the full Rips
/// filtration (every simplex up to dimension `max_dim + 1`, no threshold).
pub fn naive_rips(dm: &DistanceMatrix, max_dim: usize) -> Vec<PersistenceDiagram> {
    let n = dm.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = Vec::new();
    fn extend(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            extend(n, k, v + 1, cur, out);
            cur.pop();
        }
    }
    for size in 1..=max_dim + 2 {
        let mut sets = Vec::new();
        extend(n, size, 0, &mut Vec::new(), &mut sets);
        for s in sets {
            let mut f: f64 = 0.0;
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    f = f.max(dm.get(s[a], s[b]));
                }
            }
            simplices.push((f, s));
        }
    }
    simplices.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let position: std::collections::HashMap<Vec<usize>, usize> =
        simplices.iter().enumerate().map(|(i, s)| (s.1.clone(), i)).collect();

    // Columns as sorted row lists over Z/2.
    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|(_, s)| {
            let mut rows: Vec<usize> = if s.len() == 1 {
                Vec::new()
            } else {
                (0..s.len())
                    .map(|skip| {
                        let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                        position[&face]
                    })
                    .collect()
            };
            rows.sort_unstable();
            rows
        })
        .collect();

    let mut low_owner: std::collections::HashMap<usize, usize> = Default::default();
    let mut paired = vec![false; simplices.len()];
    let mut diagrams: Vec<PersistenceDiagram> = (0..=max_dim).map(PersistenceDiagram::empty).collect();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = sym_diff(&columns[j], &other);
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            low_owner.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let dim = simplices[low].1.len() - 1;
            let (b, d) = (simplices[low].0, simplices[j].0);
            if dim <= max_dim && d > b {
                diagrams[dim].points.push((b, d));
            }
        }
    }
    for (i, (_, s)) in simplices.iter().enumerate() {
        let dim = s.len() - 1;
        if dim <= max_dim && !paired[i] && columns[i].is_empty() {
            diagrams[dim].essential_excluded += 1;
        }
    }
    diagrams
}

fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn diagrams_match(a: &PersistenceDiagram, b: &PersistenceDiagram, tol: f64) -> bool {
    let (pa, pb) = (a.sorted_points(), b.sorted_points());
    pa.len() == pb.len()
        && pa
            .iter()
            .zip(&pb)
            .all(|(x, y)| (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol)
}

/// Connected-or-not random weighted graph on `n` vertices as an edge list.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                // Coarse grid of weights so ties occur.
                let w = (rng.random_range(1..=20) as f64) * 0.05;
                edges.push((i, j, w));
            }
        }
    }
    edges
}

/// Random symmetric matrix with zero diagonal (not necessarily a metric).
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> DistanceMatrix {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random::<f64>();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceMatrix::new(n, d).unwrap()
}

/// Exhaustive order-p Wasserstein / bottleneck between diagrams by
/// enumerating every partial matching (tiny diagrams only).
pub fn brute_force_matching(a: &[(f64, f64)], b: &[(f64, f64)], p: Option<f64>) -> f64 {
    let linf = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs().max((x.1 - y.1).abs());
    let diag = |x: (f64, f64)| (x.1 - x.0) / 2.0;
    // Assign each point of `a` to a point of `b` or to the diagonal; the
    // points of `b` left over go to the diagonal.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        a: &[(f64, f64)],
        b: &[(f64, f64)],
        used: &mut Vec<bool>,
        costs: &mut Vec<f64>,
        best: &mut f64,
        p: Option<f64>,
        linf: &dyn Fn((f64, f64), (f64, f64)) -> f64,
        diag: &dyn Fn((f64, f64)) -> f64,
    ) {
        if i == a.len() {
            let mut all = costs.clone();
            for (k, &y) in b.iter().enumerate() {
                if !used[k] {
                    all.push(diag(y));
                }
            }
            let v = match p {
                None => all.iter().copied().fold(0.0, f64::max),
                Some(p) => all.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p),
            };
            if v < *best {
                *best = v;
            }
            return;
        }
        costs.push(diag(a[i]));
        rec(i + 1, a, b, used, costs, best, p, linf, diag);
        costs.pop();
        for k in 0..b.len() {
            if !used[k] {
                used[k] = true;
                costs.push(linf(a[i], b[k]));
                rec(i + 1, a, b, used, costs, best, p, linf, diag);
                costs.pop();
                used[k] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, a, b, &mut vec![false; b.len()], &mut Vec::new(), &mut best, p, &linf, &diag);
    best
}

pub fn random_diagram<R: Rng>(rng: &mut R, max_points: usize) -> Vec<(f64, f64)> {
    let k = rng.random_range(0..=max_points);
    (0..k)
        .map(|_| {
            let b = rng.random_range(0.0..2.0);
            (b, b + rng.random_range(0.01..1.5))
        })
        .collect()
}
