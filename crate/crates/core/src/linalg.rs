//! Rank-revealing pseudo-inverse of symmetric positive semi-definite matrices.

use nalgebra::{DMatrix, DVector};

/// Pseudo-inverse of a symmetric PSD matrix through its eigendecomposition.
///
/// Eigenvalues at or below `dim * eps * max_diag` are treated as zero.
#[derive(Debug, Clone)]
pub struct SymPinv {
    pinv: DMatrix<f64>,
    rank: usize,
}

impl SymPinv {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let k = matrix.nrows();
        if k == 0 {
            return Self { pinv: DMatrix::zeros(0, 0), rank: 0 };
        }
        let max_diag = matrix.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let tol = k as f64 * f64::EPSILON * max_diag;
        // symmetrize to guard against accumulated asymmetry
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut scaled = eig.eigenvectors.clone();
        let mut rank = 0;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let inv = if lambda > tol {
                rank += 1;
                1.0 / lambda
            } else {
                0.0
            };
            scaled.column_mut(j).scale_mut(inv);
        }
        let pinv = &scaled * eig.eigenvectors.transpose();
        Self { pinv: (&pinv + pinv.transpose()) * 0.5, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.pinv * v
    }
}
