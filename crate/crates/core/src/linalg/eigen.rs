//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::matrix::{DenseMatrix, DenseVector};
use crate::error::Result;
use crate::scalar::Scalar;

/// `m = U Diag(λ) Uᵀ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DenseMatrix<T>,
    pub eigenvalues: DenseVector<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let u = &self.eigenvectors;
        let n = u.rows();
        let k = u.cols();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..k).fold(T::zero(), |s, c| s + u[(i, c)] * self.eigenvalues[c] * u[(j, c)])
        })
    }
}

const MAX_SWEEPS: usize = 100;

pub fn sym_eigen<T: Scalar>(m: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    m.check_symmetric()?;
    let n = m.rows();
    let half = T::lit(0.5);
    let mut a = DenseMatrix::from_fn(n, n, |i, j| half * (m[(i, j)] + m[(j, i)]));
    let mut v = DenseMatrix::identity(n);

    let scale = a.frobenius_norm();
    let target = T::epsilon() * scale;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the original index order among ties.
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let eigenvalues: DenseVector<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    normalize_column_signs(&mut eigenvectors);

    Ok(SymmetricEigen {
        eigenvectors,
        eigenvalues,
    })
}

fn off_diagonal_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    (s + s).sqrt()
}

fn rotate<T: Scalar>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.rows();
    let two = T::lit(2.0);
    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
    let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
        T::one() / (two * theta)
    } else {
        let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
        sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Makes the first non-negligible entry of every column nonnegative.
pub(crate) fn normalize_column_signs<T: Scalar>(m: &mut DenseMatrix<T>) {
    let tiny = T::epsilon() * T::lit(64.0);
    for j in 0..m.cols() {
        let first = (0..m.rows()).map(|i| m[(i, j)]).find(|x| x.abs() > tiny);
        if matches!(first, Some(x) if x < T::zero()) {
            for i in 0..m.rows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}
