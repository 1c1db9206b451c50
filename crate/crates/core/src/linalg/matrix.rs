use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::error::{dim_mismatch, Error, Result};
use crate::scalar::Scalar;

/// Dense column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector<T>(Vec<T>);

impl<T: Scalar> DenseVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> T) -> Self {
        Self((0..len).map(f).collect())
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> T {
        self.dot(&self.0).sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.0.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &[T]) {
        axpy(a, x, &mut self.0);
    }

    pub fn scale(&mut self, a: T) {
        self.0.iter_mut().for_each(|v| *v *= a);
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn sub(&self, other: &[T]) -> Self {
        Self(self.0.iter().zip(other).map(|(&a, &b)| a - b).collect())
    }
}

impl<T> From<Vec<T>> for DenseVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T> Deref for DenseVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for DenseVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> FromIterator<T> for DenseVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    // Four independent partial sums let the compiler vectorize.
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let mut acc = [T::zero(); 4];
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(dim_mismatch(cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `k` shared and row `i > k` mutable.
    pub(crate) fn row_pair_mut(&mut self, k: usize, i: usize) -> (&[T], &mut [T]) {
        debug_assert!(k < i);
        let c = self.cols;
        let (head, tail) = self.data.split_at_mut(i * c);
        (&head[k * c..(k + 1) * c], &mut tail[..c])
    }

    pub fn column(&self, j: usize) -> DenseVector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> DenseVector<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(dim_mismatch(
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != T::zero() {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `self * x`
    pub fn matvec(&self, x: &[T]) -> Result<DenseVector<T>> {
        if x.len() != self.cols {
            return Err(dim_mismatch(self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ * x`
    pub fn matvec_t(&self, x: &[T]) -> Result<DenseVector<T>> {
        if x.len() != self.rows {
            return Err(dim_mismatch(self.rows, x.len()));
        }
        let mut out = DenseVector::zeros(self.cols);
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                out.axpy(xi, self.row(i));
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self`
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for (i, &a) in row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let g_row = &mut g.data[i * n..(i + 1) * n];
                for j in i..n {
                    g_row[j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * a).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(dim_mismatch(
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self - selfᵀ`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                let d = (v - self.data[j * self.cols + i]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        self.check_finite()?;
        let asym = self.asymmetry();
        if asym > T::symmetry_tol() * self.max_abs() {
            return Err(Error::NotSymmetric {
                asymmetry: asym.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Relative Frobenius distance `‖self − other‖_F / max(‖other‖_F, tiny)`.
    pub fn relative_error(&self, other: &Self) -> T {
        let diff = self.sub(other).expect("same shape").frobenius_norm();
        let scale = other.frobenius_norm();
        if scale > T::zero() {
            diff / scale
        } else {
            diff
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}
