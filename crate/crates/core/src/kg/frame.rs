//! Orthogonal operators pinning basis vectors to the diagonal directions.
//!
//! A single Householder reflection maps `e_n` to the unit diagonal
//! `(1/sqrt(n), ..., 1/sqrt(n))`; for two-sample statistics the operator is
//! block-diagonal with one reflection per sample.

use super::TestSpec;
use crate::error::Result;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct OrthogonalFrame {
    matrix: DMatrix<f64>,
}

impl OrthogonalFrame {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// x = A y.
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        let v = &self.matrix * DVector::from_column_slice(y);
        out.copy_from_slice(v.as_slice());
    }
}

/// Householder reflection H with H e_n = (1/sqrt(n), ..., 1/sqrt(n)).
fn householder_to_diagonal(n: usize) -> DMatrix<f64> {
    let inv_sqrt = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, -inv_sqrt);
    v[n - 1] += 1.0; // v = e_n - I
    let norm2 = v.norm_squared();
    if norm2 < 1e-30 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (2.0 / norm2) * &v * v.transpose()
}

/// The angle between the two-sample diagonal directions:
/// omega0 = arccos(sqrt(n2 / (n1 + n2))).
pub fn omega0(n1: usize, n2: usize) -> f64 {
    ((n2 as f64) / ((n1 + n2) as f64)).sqrt().acos()
}

/// Deterministic orthogonal operator for the statistic's change of
/// coordinates: one-sample pins `A e_n` to the unit diagonal; two-sample
/// and F pin `A e_{n1}` and `A e_n` to the per-sample diagonals.
pub fn build_orthogonal_frame(spec: &TestSpec) -> Result<OrthogonalFrame> {
    spec.validate()?;
    let matrix = match *spec {
        TestSpec::OneSampleT { n } => householder_to_diagonal(n),
        TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } | TestSpec::FTest { n1, n2 } => {
            let a1 = householder_to_diagonal(n1);
            let a2 = householder_to_diagonal(n2);
            let n = n1 + n2;
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((0, 0), (n1, n1)).copy_from(&a1);
            m.view_mut((n1, n1), (n2, n2)).copy_from(&a2);
            m
        }
    };
    let frame = OrthogonalFrame { matrix };
    debug_assert!(frame.orthogonality_defect() < 1e-12);
    Ok(frame)
}

impl OrthogonalFrame {
    /// max |A'A - I| entry.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let p = self.matrix.transpose() * &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - want).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ost_frame_pins_diagonal() {
        for n in 2..=7 {
            let f = build_orthogonal_frame(&TestSpec::OneSampleT { n }).unwrap();
            assert!(f.orthogonality_defect() < 1e-12, "n={n}");
            let inv_sqrt = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                assert_relative_eq!(f.matrix()[(i, n - 1)], inv_sqrt, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ost_n2_matches_reference_matrix() {
        let f = build_orthogonal_frame(&TestSpec::OneSampleT { n: 2 }).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Last column pinned to (s, s); first column orthogonal up to sign.
        assert_relative_eq!(f.matrix()[(0, 1)], s, epsilon = 1e-15);
        assert_relative_eq!(f.matrix()[(1, 1)], s, epsilon = 1e-15);
        assert_relative_eq!(f.matrix()[(0, 0)].abs(), s, epsilon = 1e-15);
        assert_relative_eq!(f.matrix()[(1, 0)].abs(), s, epsilon = 1e-15);
    }

    #[test]
    fn tst_frame_pins_both_blocks() {
        let f = build_orthogonal_frame(&TestSpec::TwoSampleT { n1: 2, n2: 2 }).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let col = |j: usize| (0..4).map(|i| f.matrix()[(i, j)]).collect::<Vec<_>>();
        let c1 = col(1);
        let c3 = col(3);
        for (got, want) in c1.iter().zip([s, s, 0.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        for (got, want) in c3.iter().zip([0.0, 0.0, s, s]) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        assert!(f.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn omega0_value() {
        assert_relative_eq!(
            omega0(2, 2),
            (0.5f64).sqrt().acos(),
            epsilon = 1e-15
        );
        // n2 = n gives omega0 -> 0 in the limit; for n1=n2 it is pi/4.
        assert_relative_eq!(omega0(3, 3), std::f64::consts::FRAC_PI_4, epsilon = 1e-14);
    }
}
