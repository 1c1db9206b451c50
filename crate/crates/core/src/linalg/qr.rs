//! Householder QR factorization.

use super::matrix::DenseMatrix;
use crate::error::Result;
use crate::scalar::Scalar;

/// Shape of the orthogonal factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrMode {
    /// `Q` is `rows × rows`, `R` is `rows × cols`.
    Full,
    /// For tall inputs `Q` is `rows × cols` and `R` is `cols × cols`.
    /// Identical to [`QrMode::Full`] when `rows <= cols`.
    Thin,
}

#[derive(Debug, Clone)]
pub struct Qr<T> {
    pub q: DenseMatrix<T>,
    pub r: DenseMatrix<T>,
}

struct Reflector<T> {
    start: usize,
    v: Vec<T>,
    tau: T,
}

impl<T: Scalar> Reflector<T> {
    /// Applies `I - tau v vᵀ` to rows `start..` of `m`, touching columns `col0..`.
    fn apply(&self, m: &mut DenseMatrix<T>, col0: usize) {
        let cols = m.cols();
        let mut w = vec![T::zero(); cols - col0];
        for (i, &vi) in self.v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            let row = &m.row(self.start + i)[col0..];
            for (wk, &x) in w.iter_mut().zip(row) {
                *wk += vi * x;
            }
        }
        for (i, &vi) in self.v.iter().enumerate() {
            let f = self.tau * vi;
            if f == T::zero() {
                continue;
            }
            let row = &mut m.row_mut(self.start + i)[col0..];
            for (x, &wk) in row.iter_mut().zip(&w) {
                *x -= f * wk;
            }
        }
    }
}

/// Factorizes `m = Q R` with Householder reflections.
///
/// Columns of `Q` are normalized so that their first non-negligible entry is
/// nonnegative; the matching rows of `R` absorb the sign.
pub fn qr_factorize<T: Scalar>(m: &DenseMatrix<T>, mode: QrMode) -> Result<Qr<T>> {
    m.check_finite()?;
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let steps = rows.saturating_sub(1).min(cols);
    let mut reflectors = Vec::with_capacity(steps);

    for j in 0..steps {
        let x: Vec<T> = (j..rows).map(|i| a[(i, j)]).collect();
        let norm = x.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if x[0] >= T::zero() { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vv = v.iter().fold(T::zero(), |s, &e| s + e * e);
        if vv == T::zero() {
            continue;
        }
        let h = Reflector {
            start: j,
            v,
            tau: T::lit(2.0) / vv,
        };
        h.apply(&mut a, j);
        a[(j, j)] = alpha;
        for i in (j + 1)..rows {
            a[(i, j)] = T::zero();
        }
        reflectors.push(h);
    }

    let q_cols = match mode {
        QrMode::Thin if rows > cols => cols,
        _ => rows,
    };
    let mut q = DenseMatrix::from_fn(rows, q_cols, |i, j| if i == j { T::one() } else { T::zero() });
    for h in reflectors.iter().rev() {
        h.apply(&mut q, 0);
    }

    let r_rows = q_cols;
    let mut r = DenseMatrix::from_fn(r_rows, cols, |i, j| a[(i, j)]);

    let tiny = T::epsilon() * T::lit(64.0);
    for j in 0..q_cols {
        let first = (0..rows).map(|i| q[(i, j)]).find(|v| v.abs() > tiny);
        if matches!(first, Some(v) if v < T::zero()) {
            for i in 0..rows {
                q[(i, j)] = -q[(i, j)];
            }
            if j < r_rows {
                r.row_mut(j).iter_mut().for_each(|v| *v = -*v);
            }
        }
    }

    Ok(Qr { q, r })
}
