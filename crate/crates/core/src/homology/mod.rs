//! Persistent homology of topic-network snapshots.
//!
//! A snapshot is turned into a metric space by weighted shortest paths
//! ([`geodesic_distances`]); [`rips_persistence`] then computes the
//! Vietoris-Rips persistence diagrams of that space up to dimension 2.

mod geodesic;
mod rips;

pub use geodesic::geodesic_distances;
pub use rips::{enclosing_radius, rips_persistence, rips_persistence_with, RipsOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric, zero-diagonal, non-negative distance matrix stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    sentinel_used: bool,
}

impl DistanceMatrix {
    /// Validate and wrap a row-major `n x n` matrix.
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        Self::with_sentinel(n, d, false)
    }

    pub(crate) fn with_sentinel(n: usize, d: Vec<f64>, sentinel_used: bool) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Domain(format!("distance matrix needs {} entries, got {}", n * n, d.len())));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::Domain(format!("non-zero diagonal at {i}")));
            }
            for j in i + 1..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::Domain(format!("invalid distance {a} at ({i}, {j})")));
                }
                if a != b {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i}, {j}): {a} vs {b}")));
                }
            }
        }
        Ok(DistanceMatrix { n, d, sentinel_used })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("distance matrix is not square".into()));
        }
        Self::new(n, rows.concat())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// True when some pair lay in different graph components and received
    /// the finite sentinel distance.
    pub fn sentinel_used(&self) -> bool {
        self.sentinel_used
    }

    /// Multiply every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        DistanceMatrix {
            n: self.n,
            d: self.d.iter().map(|v| v * c).collect(),
            sentinel_used: self.sentinel_used,
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// Finite birth-death pairs of one homology dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim: usize,
    pub points: Vec<(f64, f64)>,
    /// Classes that never die within the filtration (not in `points`).
    pub essential_excluded: usize,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, points: Vec<(f64, f64)>) -> Self {
        PersistenceDiagram {
            dim,
            points,
            essential_excluded: 0,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in lexicographic (birth, death) order.
    pub fn sorted_points(&self) -> Vec<(f64, f64)> {
        let mut p = self.points.clone();
        p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BettiCounts {
    pub beta0: usize,
    pub beta1: usize,
    pub beta2: usize,
}

/// Count finite features per dimension.
pub fn betti_counts(diagrams: &[PersistenceDiagram]) -> BettiCounts {
    let count = |k: usize| diagrams.iter().filter(|d| d.dim == k).map(|d| d.points.len()).sum();
    BettiCounts {
        beta0: count(0),
        beta1: count(1),
        beta2: count(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betti_of_empty_is_zero() {
        assert_eq!(betti_counts(&[]), BettiCounts::default());
        let ds = vec![
            PersistenceDiagram::new(0, vec![(0.0, 1.0); 3]),
            PersistenceDiagram::new(1, vec![(1.0, 2.0)]),
            PersistenceDiagram::empty(2),
        ];
        assert_eq!(
            betti_counts(&ds),
            BettiCounts {
                beta0: 3,
                beta1: 1,
                beta2: 0
            }
        );
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 1.0]).is_err());
        assert!(DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }
}
