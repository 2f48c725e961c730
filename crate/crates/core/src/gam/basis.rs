//! Cubic regression spline basis: a natural cubic spline parameterized by its
//! values at the knots, with the integrated squared second derivative as
//! penalty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats::percentile;

#[derive(Debug, Clone)]
pub struct CrBasis {
    knots: Vec<f64>,
    /// Maps knot values to knot second derivatives (zero rows at both ends).
    f_plus: DMatrix<f64>,
    penalty: DMatrix<f64>,
}

impl CrBasis {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        let k = knots.len();
        if k < 3 {
            return Err(Error::Domain(format!("cubic regression spline needs k >= 3 (got {k})")));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spline knots must be finite and strictly increasing".into()));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = k - 2;
        let mut d = DMatrix::zeros(m, k);
        let mut b = DMatrix::zeros(m, m);
        for i in 0..m {
            d[(i, i)] = 1.0 / h[i];
            d[(i, i + 1)] = -1.0 / h[i] - 1.0 / h[i + 1];
            d[(i, i + 2)] = 1.0 / h[i + 1];
            b[(i, i)] = (h[i] + h[i + 1]) / 3.0;
            if i + 1 < m {
                b[(i, i + 1)] = h[i + 1] / 6.0;
                b[(i + 1, i)] = h[i + 1] / 6.0;
            }
        }
        let chol = b
            .cholesky()
            .ok_or_else(|| Error::Domain("degenerate knot spacing".into()))?;
        let f = chol.solve(&d);
        let mut f_plus = DMatrix::zeros(k, k);
        f_plus.view_mut((1, 0), (m, k)).copy_from(&f);
        let mut penalty = d.transpose() * &f;
        penalty = (&penalty + penalty.transpose()) * 0.5;
        Ok(CrBasis { knots, f_plus, penalty })
    }

    /// Knots at evenly spaced quantiles of the distinct values of `x`.
    /// `k` is lowered (with a warning) when `x` has fewer distinct values.
    pub fn from_data(x: &[f64], k: usize) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite covariate value".into()));
        }
        let mut u = x.to_vec();
        u.sort_by(f64::total_cmp);
        u.dedup();
        let k = if u.len() < k {
            log::warn!("only {} distinct covariate values; basis dimension lowered from {k}", u.len());
            u.len()
        } else {
            k
        };
        if k < 3 {
            return Err(Error::Domain(format!(
                "a smooth needs at least 3 distinct covariate values (got {})",
                u.len()
            )));
        }
        let knots = (0..k)
            .map(|j| percentile(&u, 100.0 * j as f64 / (k - 1) as f64))
            .collect();
        Self::new(knots)
    }

    pub fn k(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Second-derivative penalty on the knot values (k x k, rank k - 2).
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Basis functions evaluated at `x`; linear beyond the boundary knots.
    pub fn row(&self, x: f64) -> DVector<f64> {
        let k = self.k();
        let kn = &self.knots;
        let mut out = DVector::zeros(k);
        if x < kn[0] || x > kn[k - 1] {
            let (j, at, slope_sign) = if x < kn[0] { (0, 0, -1.0) } else { (k - 2, k - 1, 1.0) };
            let h = kn[j + 1] - kn[j];
            let dist = x - kn[at];
            // Value at the boundary knot plus the end slope times the distance.
            out[at] += 1.0;
            out[j] -= dist / h;
            out[j + 1] += dist / h;
            let (cm, cp) = if slope_sign < 0.0 { (-h / 3.0, -h / 6.0) } else { (h / 6.0, h / 3.0) };
            for c in 0..k {
                out[c] += dist * (cm * self.f_plus[(j, c)] + cp * self.f_plus[(j + 1, c)]);
            }
            return out;
        }
        let j = match kn.partition_point(|&t| t <= x) {
            0 => 0,
            p => (p - 1).min(k - 2),
        };
        let h = kn[j + 1] - kn[j];
        let (l, r) = (kn[j + 1] - x, x - kn[j]);
        out[j] += l / h;
        out[j + 1] += r / h;
        let cm = (l * l * l / h - h * l) / 6.0;
        let cp = (r * r * r / h - h * r) / 6.0;
        for c in 0..k {
            out[c] += cm * self.f_plus[(j, c)] + cp * self.f_plus[(j + 1, c)];
        }
        out
    }

    pub fn design(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(xs.len(), self.k());
        for (i, &x) in xs.iter().enumerate() {
            m.set_row(i, &self.row(x).transpose());
        }
        m
    }
}

/// A smooth with the sum-to-zero constraint absorbed: `k - 1` columns.
#[derive(Debug, Clone)]
pub(crate) struct ConstrainedSmooth {
    pub basis: CrBasis,
    /// k x (k-1) null-space basis of the constraint.
    pub z: DMatrix<f64>,
    pub design: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

impl ConstrainedSmooth {
    pub fn new(basis: CrBasis, x: &[f64]) -> Self {
        let raw = basis.design(x);
        let k = basis.k();
        let c: DVector<f64> = raw.row_sum().transpose();
        let norm = c.norm();
        let mut v = c.clone();
        v[0] += if c[0] >= 0.0 { norm } else { -norm };
        let vv = v.dot(&v);
        let h = DMatrix::identity(k, k) - (&v * v.transpose()) * (2.0 / vv);
        let z = h.columns(1, k - 1).into_owned();
        let design = &raw * &z;
        let mut penalty = z.transpose() * basis.penalty() * &z;
        penalty = (&penalty + penalty.transpose()) * 0.5;
        let x_inf = design.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
        let s_one = penalty.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
        if s_one > 0.0 {
            penalty *= x_inf * x_inf / s_one;
        }
        ConstrainedSmooth { basis, z, design, penalty }
    }

    pub fn width(&self) -> usize {
        self.z.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_at_knots() {
        let b = CrBasis::new(vec![0.0, 0.7, 1.5, 3.0, 3.2]).unwrap();
        for (j, &t) in b.knots().iter().enumerate() {
            let r = b.row(t);
            for c in 0..b.k() {
                let want = if c == j { 1.0 } else { 0.0 };
                assert!((r[c] - want).abs() < 1e-12, "knot {j} col {c}: {}", r[c]);
            }
        }
    }

    #[test]
    fn linear_functions_are_unpenalized() {
        let b = CrBasis::new(vec![-1.0, 0.0, 0.5, 2.0, 4.0, 4.5]).unwrap();
        let beta = DVector::from_iterator(6, b.knots().iter().map(|t| 3.0 * t - 1.0));
        assert!((beta.transpose() * b.penalty() * &beta)[0].abs() < 1e-10);
        for x in [-3.0, -1.0, 0.2, 1.7, 4.5, 7.0] {
            assert!((b.row(x).dot(&beta) - (3.0 * x - 1.0)).abs() < 1e-10);
        }
        let eig = b.penalty().clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&e| e >= -1e-10));
        assert_eq!(eig.iter().filter(|&&e| e > 1e-8).count(), 4);
    }

    #[test]
    fn quantile_knots_and_reduction() {
        let x: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(CrBasis::from_data(&x, 3).unwrap().knots(), &[0.0, 5.0, 10.0]);
        assert_eq!(CrBasis::from_data(&[1.0, 2.0, 2.0, 3.0, 1.0], 4).unwrap().k(), 3);
        assert!(CrBasis::from_data(&[1.0, 2.0, 1.0], 4).is_err());
    }

    #[test]
    fn constraint_centres_columns() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 4.0).collect();
        let s = ConstrainedSmooth::new(CrBasis::from_data(&x, 5).unwrap(), &x);
        assert_eq!(s.width(), 4);
        for c in s.design.column_iter() {
            assert!(c.sum().abs() < 1e-10);
        }
    }
}
