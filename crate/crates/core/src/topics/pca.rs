use nalgebra::{DMatrix, SymmetricEigen};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Principal-component projection with its axes and explained variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub reduced: EmbeddingMatrix,
    /// Unit axes in the original space, one per output column.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

const RANK_TOL: f64 = 1e-10;

/// Project mean-centred rows onto the leading `target_dim` principal axes.
pub fn reduce_pca(matrix: &EmbeddingMatrix, target_dim: usize) -> Result<PcaProjection> {
    let (n, d) = (matrix.n_rows(), matrix.dim());
    if target_dim < 1 || target_dim >= d.max(2) {
        return Err(Error::Config(format!("target_dim {target_dim} must lie in [1, {d})")));
    }
    if n <= target_dim {
        return Err(Error::Domain(format!("{n} rows cannot be reduced to {target_dim} dimensions")));
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| matrix.row(i)[j] as f64);
    for j in 0..d {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }

    // Eigen-decompose whichever Gram form is smaller.
    let (values, axes) = if d <= n {
        let cov = x.transpose() * &x;
        let eig = SymmetricEigen::new(cov);
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    } else {
        let gram = &x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let mut axes = x.transpose() * &eig.eigenvectors;
        for (k, mut col) in axes.column_iter_mut().enumerate() {
            let norm = eig.eigenvalues[k].max(0.0).sqrt();
            if norm > 0.0 {
                col /= norm;
            }
        }
        (eig.eigenvalues.as_slice().to_vec(), axes)
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let top = values[order[0]].max(0.0);
    let rank = order.iter().filter(|&&k| values[k] > RANK_TOL * top.max(f64::MIN_POSITIVE)).count();
    let k = if rank < target_dim {
        log::warn!("embedding rank {rank} is below target_dim {target_dim}; reducing to {rank}");
        rank.max(1)
    } else {
        target_dim
    };

    let mut components = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    for &idx in &order[..k] {
        let mut axis: Vec<f64> = axes.column(idx).iter().copied().collect();
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        axis.iter_mut().for_each(|v| *v /= norm);
        let lead = axis
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(0, |(i, _)| i);
        if axis[lead] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(axis);
        ratios.push(if total > 0.0 { values[idx].max(0.0) / total } else { 0.0 });
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| components.iter().map(|c| x.row(i).iter().zip(c).map(|(a, b)| a * b).sum()).collect())
        .collect();
    Ok(PcaProjection {
        reduced: EmbeddingMatrix::from_rows(matrix.row_ids().to_vec(), &rows, "pca")?,
        components,
        explained_variance_ratio: ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64)).collect())
            .collect();
        EmbeddingMatrix::from_rows((0..n as u64).collect(), &rows, "original").unwrap()
    }

    #[test]
    fn collinear_points_have_one_component() {
        let rows: Vec<Vec<f64>> = (0..6).map(|t| vec![t as f64, 2.0 * t as f64, -(t as f64)]).collect();
        let m = EmbeddingMatrix::from_rows((0..6).collect(), &rows, "x").unwrap();
        let p = reduce_pca(&m, 2).unwrap();
        assert_eq!(p.components.len(), 1);
        assert!((p.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axes_are_orthonormal_and_sorted() {
        for (n, d) in [(50, 8), (6, 20)] {
            let p = reduce_pca(&random(n, d, n as u64), 4).unwrap();
            for a in 0..p.components.len() {
                for b in 0..p.components.len() {
                    let dot: f64 = p.components[a].iter().zip(&p.components[b]).map(|(x, y)| x * y).sum();
                    assert!((dot - f64::from(u8::from(a == b))).abs() < 1e-8);
                }
                let c = &p.components[a];
                let lead = c.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
                assert!(lead > 0.0);
            }
            assert!(p.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn both_gram_forms_agree() {
        // 9 rows in 12 dimensions versus the same data padded with rows at the mean.
        let m = random(9, 12, 4);
        let small = reduce_pca(&m, 3).unwrap();
        let mut rows = m.rows_f64();
        let mean: Vec<f64> = (0..12).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / 9.0).collect();
        rows.extend(std::iter::repeat_n(mean, 9));
        let tall = EmbeddingMatrix::from_rows((0..18).collect(), &rows, "x").unwrap();
        let big = reduce_pca(&tall, 3).unwrap();
        for (a, b) in small.components.iter().zip(&big.components) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        let m = random(5, 4, 1);
        assert!(reduce_pca(&m, 4).is_err());
        assert!(reduce_pca(&m, 0).is_err());
        assert!(reduce_pca(&random(3, 8, 1), 3).is_err());
    }
}
