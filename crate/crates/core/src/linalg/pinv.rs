use super::eigen::sym_eigen;
use super::matrix::{DenseMatrix, DenseVector};
use crate::error::{dim_mismatch, Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues at or below this fraction of the largest one are treated as zero.
pub const PINV_RANK_TOL: f64 = 1e-12;

/// `g† b` for a symmetric positive-semidefinite `g` of order 1 or 2.
///
/// Rank-deficient inputs give the minimum-norm solution.
pub fn small_pinv_solve<T: Scalar>(g: &DenseMatrix<T>, b: &[T]) -> Result<DenseVector<T>> {
    let m = g.rows();
    if !g.is_square() {
        return Err(Error::NotSquare {
            rows: g.rows(),
            cols: g.cols(),
        });
    }
    if !(1..=2).contains(&m) {
        return Err(dim_mismatch("order 1 or 2", m));
    }
    if b.len() != m {
        return Err(dim_mismatch(m, b.len()));
    }
    let half = T::lit(0.5);
    let sym = DenseMatrix::from_fn(m, m, |i, j| half * (g[(i, j)] + g[(j, i)]));
    let eig = sym_eigen(&sym)?;
    let largest = eig.eigenvalues[0];
    let reference = if largest > T::zero() { largest } else { T::one() };
    let tol = T::lit(PINV_RANK_TOL) * reference;

    let mut x = DenseVector::zeros(m);
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= tol {
            continue;
        }
        let u = eig.eigenvectors.column(c);
        let coeff = u.dot(b) / lambda;
        x.axpy(coeff, &u);
    }
    Ok(x)
}
