//! Validated SPD covariance matrices for zero-mean multivariate normals.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Symmetric, strictly positive-definite covariance matrix.
///
/// Symmetry is checked to 1e-12 relative tolerance and the smallest
/// eigenvalue must be strictly positive; the Cholesky factor is kept for
/// sampling, determinants, and quadratic forms.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    matrix: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

impl CovarianceSpec {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::NotSpd(format!(
                "matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd("matrix has non-finite entries".into()));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSpd(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        matrix[(i, j)],
                        matrix[(j, i)]
                    )));
                }
            }
        }
        let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)]));
        let min_eig = sym
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig <= 0.0 {
            return Err(Error::NotSpd(format!(
                "smallest eigenvalue {min_eig:.3e} is not strictly positive"
            )));
        }
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("Cholesky factorization failed".into()))?;
        let chol_l = chol.l();
        let log_det = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self { matrix: sym, chol_l, log_det })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSpd("covariance rows must all have the matrix dimension".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }

    /// v' Sigma^{-1} v via two triangular solves.
    pub fn inv_quadratic_form(&self, v: &[f64]) -> f64 {
        let mut w = DVector::from_column_slice(v);
        self.chol_l.solve_lower_triangular_mut(&mut w);
        w.norm_squared()
    }

    /// Zero-mean multivariate normal density at `x`.
    pub fn mvn_pdf(&self, x: &[f64]) -> f64 {
        let n = self.dim() as f64;
        let q = self.inv_quadratic_form(x);
        (-0.5 * q - 0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * self.log_det).exp()
    }

    /// One draw of MVN(0, Sigma) written into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        use rand_distr::Distribution;
        let n = self.dim();
        debug_assert_eq!(out.len(), n);
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let y = &self.chol_l * z;
        out.copy_from_slice(y.as_slice());
    }

    /// If the matrix is diag(s1^2 .. s1^2, s2^2 .. s2^2) with the first
    /// block of size `n1`, return (s1^2, s2^2).
    pub fn two_block_isotropic(&self, n1: usize) -> Option<(f64, f64)> {
        let n = self.dim();
        if n1 == 0 || n1 >= n {
            return None;
        }
        let s1 = self.matrix[(0, 0)];
        let s2 = self.matrix[(n1, n1)];
        for i in 0..n {
            for j in 0..n {
                let want = if i != j {
                    0.0
                } else if i < n1 {
                    s1
                } else {
                    s2
                };
                if (self.matrix[(i, j)] - want).abs() > 1e-14 * s1.max(s2) {
                    return None;
                }
            }
        }
        Some((s1, s2))
    }

    /// True when the matrix is sigma^2 * I.
    pub fn is_isotropic(&self) -> Option<f64> {
        let n = self.dim();
        let s = self.matrix[(0, 0)];
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { s } else { 0.0 };
                if (self.matrix[(i, j)] - want).abs() > 1e-14 * s {
                    return None;
                }
            }
        }
        Some(s)
    }
}
