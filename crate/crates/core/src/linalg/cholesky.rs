use super::matrix::{axpy, dot, DenseMatrix, DenseVector};
use crate::error::{dim_mismatch, Error, Result};
use crate::scalar::Scalar;

/// Upper-triangular Cholesky factor `a = Rᵀ R`.
///
/// The factorization is right-looking so that every update is a contiguous
/// row operation; only the upper triangle of the working copy is meaningful.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    factor: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        a.check_symmetric()?;
        let n = a.rows();
        let mut r = a.clone();
        for k in 0..n {
            let d = r[(k, k)];
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: k,
                    value: d.to_f64_lossy(),
                });
            }
            let inv = d.sqrt().recip();
            r.row_mut(k)[k..].iter_mut().for_each(|v| *v *= inv);
            for i in (k + 1)..n {
                let (rk, ri) = r.row_pair_mut(k, i);
                let f = rk[i];
                if f != T::zero() {
                    axpy(-f, &rk[i..], &mut ri[i..]);
                }
            }
        }
        Ok(Self { factor: r })
    }

    pub fn solve(&self, b: &[T]) -> Result<DenseVector<T>> {
        let r = &self.factor;
        let n = r.rows();
        if b.len() != n {
            return Err(dim_mismatch(n, b.len()));
        }
        // Rᵀ y = b, column by column of Rᵀ.
        let mut y = b.to_vec();
        for k in 0..n {
            let row = r.row(k);
            y[k] /= row[k];
            let yk = y[k];
            axpy(-yk, &row[k + 1..], &mut y[k + 1..]);
        }
        // R x = y.
        for i in (0..n).rev() {
            let row = r.row(i);
            y[i] = (y[i] - dot(&row[i + 1..], &y[i + 1..])) / row[i];
        }
        Ok(y.into())
    }
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn spd_solve<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<DenseVector<T>> {
    if a.rows() != b.len() {
        return Err(dim_mismatch(a.rows(), b.len()));
    }
    Cholesky::new(a)?.solve(b)
}
