//! Small dense linear-algebra helpers shared across modules.
//!
//! All portfolio formulas in this crate reduce to solves against symmetric
//! positive-definite matrices of the asset dimension (at most a few dozen).
//! Solves go through Cholesky factorisations; an explicit inverse is only
//! materialised where a formula uses the inverse as a matrix in its own right.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues above `-PSD_TOL` are treated as non-negative when factoring a
/// positive-semidefinite matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Checks that `m` is square with the given side length.
pub fn check_dim(m: &DMatrix<f64>, side: usize, context: &'static str) -> Result<()> {
    if m.nrows() != side || m.ncols() != side {
        return Err(Error::Dimension {
            context,
            expected: side,
            actual: if m.nrows() != side { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

/// Checks that `m` is square and symmetric within [`SYMMETRY_TOL`].
pub fn check_symmetric(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            context,
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { context });
            }
        }
    }
    Ok(())
}

/// Returns `(m + m') / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factorisation of a symmetric positive-definite matrix.
///
/// Symmetry is verified first; a failed factorisation reports the matrix as
/// not positive definite. No regularisation is applied. Exactly singular
/// matrices (a zero pivot) are rejected even when the factorisation itself
/// tolerates them, so downstream solves cannot produce infinities.
pub fn spd_cholesky(m: &DMatrix<f64>, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    check_symmetric(m, context)?;
    let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite { context })?;
    if !chol.l_dirty().diagonal().iter().all(|&d| d > 0.0) {
        return Err(Error::NotPositiveDefinite { context });
    }
    Ok(chol)
}

/// Solves `m x = b` for symmetric positive-definite `m`.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    Ok(spd_cholesky(m, context)?.solve(b))
}

/// Factor `f` of a symmetric positive-semidefinite matrix with `f f' = m`.
///
/// Uses a symmetric eigendecomposition and clamps eigenvalues in
/// `[-PSD_TOL, 0)` to zero, so genuinely singular matrices (including the
/// zero matrix) are accepted. Eigenvalues below `-PSD_TOL` are rejected.
pub fn psd_factor(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    check_symmetric(m, context)?;
    let eig = m.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite { context });
        }
        let root = lambda.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(root);
    }
    Ok(scaled)
}

/// Kronecker product of two vectors with column-major ('vec') ordering:
/// entry `l * len(b) + j` equals `a[l] * b[j]`.
pub fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for l in 0..a.len() {
        for j in 0..b.len() {
            out[l * b.len() + j] = a[l] * b[j];
        }
    }
    out
}

/// A vector of ones of length `n`.
pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_check_accepts_and_rejects() {
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(check_symmetric(&ok, "test").is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5 + 1e-9, 1.0]);
        assert!(matches!(
            check_symmetric(&bad, "test"),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            spd_cholesky(&m, "test"),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn psd_factor_handles_zero_and_singular() {
        let zero = DMatrix::zeros(3, 3);
        let f = psd_factor(&zero, "test").unwrap();
        assert_eq!(f, DMatrix::zeros(3, 3));

        // Rank-one matrix v v' has factor f with f f' = v v'.
        let v = DVector::from_row_slice(&[1.0, 2.0]);
        let m = &v * v.transpose();
        let f = psd_factor(&m, "test").unwrap();
        let back = &f * f.transpose();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(back[(i, j)], m[(i, j)], epsilon = 1e-12);
            }
        }

        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_factor(&neg, "test").is_err());
    }

    #[test]
    fn kron_vec_matches_hand_result() {
        let a = DVector::from_row_slice(&[1.0, 2.0]);
        let b = DVector::from_row_slice(&[3.0, 4.0, 5.0]);
        let k = kron_vec(&a, &b);
        assert_eq!(k.as_slice(), &[3.0, 4.0, 5.0, 6.0, 8.0, 10.0]);
    }
}
