use std::sync::OnceLock;

use super::Dataset;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::scalar::Scalar;

/// The `K × (N+1)` matrix whose row `k` is `y_k [x_kᵀ 1]`.
///
/// Kept dense, with a sparse row view for the products used in every
/// iteration. `LᵀL` is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    dense: DenseMatrix<T>,
    sparse_rows: Vec<Vec<(usize, T)>>,
    gram: OnceLock<DenseMatrix<T>>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Folds labels and the bias column into `L`.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::Empty("design matrix needs at least one sample"));
        }
        let n = ds.num_features;
        let mut dense = DenseMatrix::zeros(ds.len(), n + 1);
        for (k, s) in ds.samples.iter().enumerate() {
            let y = T::lit(f64::from(s.label));
            let row = dense.row_mut(k);
            for &(i, v) in &s.features {
                if i > n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                row[i - 1] = y * T::lit(v);
            }
            row[n] = y;
        }
        Ok(Self::from_matrix(dense))
    }

    /// Wraps an arbitrary matrix as `L`; the last column plays the bias role.
    pub fn from_matrix(dense: DenseMatrix<T>) -> Self {
        let sparse_rows = (0..dense.rows())
            .map(|k| {
                dense
                    .row(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != T::zero())
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        Self {
            dense,
            sparse_rows,
            gram: OnceLock::new(),
        }
    }

    /// `K`
    pub fn samples(&self) -> usize {
        self.dense.rows()
    }

    /// `N + 1`
    pub fn dim(&self) -> usize {
        self.dense.cols()
    }

    /// `N`
    pub fn num_features(&self) -> usize {
        self.dense.cols() - 1
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.dense
    }

    pub fn row(&self, k: usize) -> &[T] {
        self.dense.row(k)
    }

    pub fn sparse_row(&self, k: usize) -> &[(usize, T)] {
        &self.sparse_rows[k]
    }

    /// `L_kᵀ θ`
    #[inline]
    pub fn row_dot(&self, k: usize, theta: &[T]) -> T {
        self.sparse_rows[k]
            .iter()
            .fold(T::zero(), |s, &(i, v)| s + v * theta[i])
    }

    /// `L θ`
    pub fn apply(&self, theta: &[T]) -> Result<DenseVector<T>> {
        if theta.len() != self.dim() {
            return Err(dim_mismatch(self.dim(), theta.len()));
        }
        Ok((0..self.samples()).map(|k| self.row_dot(k, theta)).collect())
    }

    /// `Lᵀ v`
    pub fn apply_t(&self, v: &[T]) -> Result<DenseVector<T>> {
        if v.len() != self.samples() {
            return Err(dim_mismatch(self.samples(), v.len()));
        }
        let mut out = DenseVector::zeros(self.dim());
        for (k, &vk) in v.iter().enumerate() {
            if vk == T::zero() {
                continue;
            }
            for &(i, l) in &self.sparse_rows[k] {
                out[i] += vk * l;
            }
        }
        Ok(out)
    }

    /// `LᵀL`, cached.
    pub fn gram(&self) -> &DenseMatrix<T> {
        self.gram.get_or_init(|| self.dense.gram())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Sample;

    #[test]
    fn rows_fold_labels_and_bias() {
        let ds = Dataset::new(
            "t",
            vec![
                Sample::new(vec![(1, 1.0), (2, 2.0)], -1),
                Sample::new(vec![], 1),
            ],
        )
        .with_num_features(2)
        .unwrap();
        let l = DesignMatrix::<f64>::from_dataset(&ds).unwrap();
        assert_eq!(l.row(0), &[-1.0, -2.0, -1.0]);
        assert_eq!(l.row(1), &[0.0, 0.0, 1.0]);
        assert_eq!((l.samples(), l.dim(), l.num_features()), (2, 3, 2));
    }

    #[test]
    fn sparse_products_match_dense() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0, -2.0], vec![0.0, 3.0, 1.0]]).unwrap();
        let l = DesignMatrix::from_matrix(m.clone());
        let theta = [0.5, -1.0, 2.0];
        assert_eq!(l.apply(&theta).unwrap(), m.matvec(&theta).unwrap());
        let v = [2.0, -1.0];
        assert_eq!(l.apply_t(&v).unwrap(), m.matvec_t(&v).unwrap());
        assert_eq!(l.gram(), &m.gram());
    }

    #[test]
    fn feature_beyond_declared_width_is_rejected() {
        let mut ds = Dataset::new("t", vec![Sample::new(vec![(3, 1.0)], 1)]);
        ds.num_features = 2;
        assert!(DesignMatrix::<f64>::from_dataset(&ds).is_err());
    }
}
