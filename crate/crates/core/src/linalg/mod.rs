//! Dense linear algebra kernels: Householder QR, Jacobi symmetric
//! eigendecomposition, Cholesky solves and a small pseudo-inverse.
//!
//! All routines are pure functions of their inputs.

mod cholesky;
mod eigen;
mod matrix;
mod pinv;
mod qr;

pub use cholesky::{spd_solve, Cholesky};
pub use eigen::{sym_eigen, SymmetricEigen};
pub use matrix::{DenseMatrix, DenseVector};
pub use pinv::{small_pinv_solve, PINV_RANK_TOL};
pub use qr::{qr_factorize, Qr, QrMode};
