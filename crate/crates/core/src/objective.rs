//! The training loss `Φ(θ) = Σ_k ρ²(L_kᵀθ) + Σ_i φ(w_i) + (η/2)‖w‖²`, its
//! gradient, the per-sample terms and the sparsity-promoting potentials.
//!
//! `θ = [w; β]` has length `N + 1`; the bias `β` is never regularized.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::dataio::{DesignMatrix, Label};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::DenseVector;
use crate::scalar::Scalar;

/// Squared hinge `(max{1 − v, 0})²`.
#[inline]
pub fn sq_hinge<T: Scalar>(v: T) -> T {
    let slack = (T::one() - v).max(T::zero());
    slack * slack
}

/// Derivative of [`sq_hinge`]: `−2 max{1 − v, 0}`.
#[inline]
pub fn sq_hinge_deriv<T: Scalar>(v: T) -> T {
    let slack = (T::one() - v).max(T::zero());
    -(slack + slack)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizerKind {
    /// `φ ≡ 0`; only the `(η/2)‖w‖²` term remains.
    QuadraticOnly,
    /// `φ(w) = λ √(w² + δ²)`, a smooth convex surrogate of `λ|w|`.
    Hyperbolic,
    /// `φ(w) = λ (1 − exp(−w²/2δ²))`, a smooth nonconvex surrogate of `λ 1{w≠0}`.
    Welsh,
}

impl RegularizerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::QuadraticOnly => "l2",
            Self::Hyperbolic => "hyperbolic",
            Self::Welsh => "welsh",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RegularizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "quadratic" | "quadratic-only" | "none" => Ok(Self::QuadraticOnly),
            "hyperbolic" | "l1" | "l1-smooth" => Ok(Self::Hyperbolic),
            "welsh" | "l0" | "l0-smooth" => Ok(Self::Welsh),
            other => Err(Error::InvalidConfig(format!("unknown regularizer {other:?}"))),
        }
    }
}

/// Penalty `f(w) = Σ φ(w_i) + (η/2)‖w‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer<T> {
    pub kind: RegularizerKind,
    pub lambda: T,
    pub delta: T,
    pub eta: T,
}

impl<T: Scalar> Regularizer<T> {
    pub fn quadratic_only(eta: T) -> Self {
        Self {
            kind: RegularizerKind::QuadraticOnly,
            lambda: T::zero(),
            delta: T::zero(),
            eta,
        }
    }

    pub fn hyperbolic(lambda: T, delta: T, eta: T) -> Self {
        Self {
            kind: RegularizerKind::Hyperbolic,
            lambda,
            delta,
            eta,
        }
    }

    pub fn welsh(lambda: T, delta: T, eta: T) -> Self {
        Self {
            kind: RegularizerKind::Welsh,
            lambda,
            delta,
            eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= T::zero()) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.kind != RegularizerKind::QuadraticOnly {
            if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "lambda must be >= 0, got {}",
                    self.lambda
                )));
            }
            if !(self.delta > T::zero()) || !self.delta.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "delta must be > 0 for the {} potential, got {}",
                    self.kind, self.delta
                )));
            }
        }
        Ok(())
    }

    /// Lipschitz constant of `φ′`.
    pub fn lipschitz_a(&self) -> T {
        match self.kind {
            RegularizerKind::QuadraticOnly => T::zero(),
            RegularizerKind::Hyperbolic => self.lambda / self.delta,
            RegularizerKind::Welsh => self.lambda / (self.delta * self.delta),
        }
    }

    /// `φ(w)`
    #[inline]
    pub fn potential(&self, w: T) -> T {
        match self.kind {
            RegularizerKind::QuadraticOnly => T::zero(),
            RegularizerKind::Hyperbolic => self.lambda * (w * w + self.delta * self.delta).sqrt(),
            RegularizerKind::Welsh => self.lambda * (T::one() - self.gauss(w)),
        }
    }

    /// `φ′(w)`
    #[inline]
    pub fn potential_deriv(&self, w: T) -> T {
        match self.kind {
            RegularizerKind::QuadraticOnly => T::zero(),
            RegularizerKind::Hyperbolic => {
                self.lambda * w / (w * w + self.delta * self.delta).sqrt()
            }
            RegularizerKind::Welsh => {
                self.lambda * w / (self.delta * self.delta) * self.gauss(w)
            }
        }
    }

    /// `ψ(w) = φ′(w)/w`, in closed form so it is finite at `w = 0`.
    #[inline]
    pub fn psi(&self, w: T) -> T {
        match self.kind {
            RegularizerKind::QuadraticOnly => T::zero(),
            RegularizerKind::Hyperbolic => self.lambda / (w * w + self.delta * self.delta).sqrt(),
            RegularizerKind::Welsh => self.lambda / (self.delta * self.delta) * self.gauss(w),
        }
    }

    #[inline]
    fn gauss(&self, w: T) -> T {
        (-(w * w) / (T::lit(2.0) * self.delta * self.delta)).exp()
    }

    /// `f(w)`
    pub fn value(&self, w: &[T]) -> T {
        let half_eta = T::lit(0.5) * self.eta;
        w.iter()
            .fold(T::zero(), |s, &wi| s + self.potential(wi) + half_eta * wi * wi)
    }

    /// Adds `∇f̃(θ)` (zero in the bias slot) into `out`.
    pub fn add_gradient(&self, theta: &[T], out: &mut [T]) {
        let n = theta.len() - 1;
        for i in 0..n {
            out[i] += self.potential_deriv(theta[i]) + self.eta * theta[i];
        }
    }
}

/// `θ = [w₁ … w_N, β]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector<T>(DenseVector<T>);

impl<T: Scalar> ParamVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self(DenseVector::zeros(dim))
    }

    pub fn weights(&self) -> &[T] {
        &self.0[..self.0.len() - 1]
    }

    pub fn bias(&self) -> T {
        self.0[self.0.len() - 1]
    }

    pub fn num_features(&self) -> usize {
        self.0.len() - 1
    }

    pub fn into_inner(self) -> DenseVector<T> {
        self.0
    }
}

impl<T> From<Vec<T>> for ParamVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(DenseVector::from(v))
    }
}

impl<T> From<DenseVector<T>> for ParamVector<T> {
    fn from(v: DenseVector<T>) -> Self {
        Self(v)
    }
}

impl<T> Deref for ParamVector<T> {
    type Target = DenseVector<T>;
    fn deref(&self) -> &DenseVector<T> {
        &self.0
    }
}

impl<T> DerefMut for ParamVector<T> {
    fn deref_mut(&mut self) -> &mut DenseVector<T> {
        &mut self.0
    }
}

/// A training problem: design matrix plus regularizer.
#[derive(Debug, Clone)]
pub struct ObjectiveContext<T> {
    pub design: Arc<DesignMatrix<T>>,
    pub reg: Regularizer<T>,
}

impl<T: Scalar> ObjectiveContext<T> {
    pub fn new(design: impl Into<Arc<DesignMatrix<T>>>, reg: Regularizer<T>) -> Result<Self> {
        reg.validate()?;
        Ok(Self {
            design: design.into(),
            reg,
        })
    }

    pub fn dim(&self) -> usize {
        self.design.dim()
    }

    pub fn samples(&self) -> usize {
        self.design.samples()
    }

    fn check_dim(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(dim_mismatch(self.dim(), theta.len()));
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.samples() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.samples(),
            });
        }
        Ok(())
    }

    pub fn phi(&self, theta: &[T]) -> Result<T> {
        self.check_dim(theta)?;
        let loss = (0..self.samples()).fold(T::zero(), |s, k| {
            s + sq_hinge(self.design.row_dot(k, theta))
        });
        Ok(loss + self.reg.value(&theta[..theta.len() - 1]))
    }

    pub fn grad(&self, theta: &[T]) -> Result<DenseVector<T>> {
        self.check_dim(theta)?;
        let d: Vec<T> = (0..self.samples())
            .map(|k| sq_hinge_deriv(self.design.row_dot(k, theta)))
            .collect();
        let mut g = self.design.apply_t(&d)?;
        self.reg.add_gradient(theta, &mut g);
        Ok(g)
    }

    /// `Φ` and `∇Φ` sharing one pass over the margins.
    pub fn phi_and_grad(&self, theta: &[T]) -> Result<(T, DenseVector<T>)> {
        self.check_dim(theta)?;
        let mut loss = T::zero();
        let d: Vec<T> = (0..self.samples())
            .map(|k| {
                let v = self.design.row_dot(k, theta);
                loss += sq_hinge(v);
                sq_hinge_deriv(v)
            })
            .collect();
        let mut g = self.design.apply_t(&d)?;
        self.reg.add_gradient(theta, &mut g);
        Ok((loss + self.reg.value(&theta[..theta.len() - 1]), g))
    }

    /// `Φ_k(θ) = ρ²(L_kᵀθ) + f̃(θ)`; the whole regularizer appears in every term.
    pub fn phi_k(&self, theta: &[T], k: usize) -> Result<T> {
        self.check_dim(theta)?;
        self.check_index(k)?;
        Ok(sq_hinge(self.design.row_dot(k, theta)) + self.reg.value(&theta[..theta.len() - 1]))
    }

    /// `∇Φ_k(θ) = L_k ρ²′(L_kᵀθ) + ∇f̃(θ)`
    pub fn grad_k(&self, theta: &[T], k: usize) -> Result<DenseVector<T>> {
        self.check_dim(theta)?;
        self.check_index(k)?;
        let mut g = DenseVector::zeros(self.dim());
        self.add_sample_grad(theta, k, T::one(), &mut g);
        self.reg.add_gradient(theta, &mut g);
        Ok(g)
    }

    /// `(1/B) Σ_{i∈batch} ∇Φ_i(θ)`. Indices must be in range.
    pub fn minibatch_grad(&self, theta: &[T], batch: &[usize], out: &mut DenseVector<T>) {
        debug_assert_eq!(out.len(), self.dim());
        out.iter_mut().for_each(|v| *v = T::zero());
        let scale = T::one() / T::lit(batch.len() as f64);
        for &k in batch {
            self.add_sample_grad(theta, k, scale, out);
        }
        self.reg.add_gradient(theta, out);
    }

    #[inline]
    fn add_sample_grad(&self, theta: &[T], k: usize, scale: T, out: &mut [T]) {
        let d = sq_hinge_deriv(self.design.row_dot(k, theta));
        if d == T::zero() {
            return;
        }
        let f = scale * d;
        for &(i, l) in self.design.sparse_row(k) {
            out[i] += f * l;
        }
    }
}

pub fn eval_phi<T: Scalar>(ctx: &ObjectiveContext<T>, p: &ParamVector<T>) -> Result<T> {
    ctx.phi(p)
}

pub fn grad_phi<T: Scalar>(ctx: &ObjectiveContext<T>, p: &ParamVector<T>) -> Result<DenseVector<T>> {
    ctx.grad(p)
}

pub fn eval_phi_k<T: Scalar>(ctx: &ObjectiveContext<T>, p: &ParamVector<T>, k: usize) -> Result<T> {
    ctx.phi_k(p, k)
}

pub fn grad_phi_k<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    p: &ParamVector<T>,
    k: usize,
) -> Result<DenseVector<T>> {
    ctx.grad_k(p, k)
}

/// Decision value `wᵀx + β` for 1-based sparse features. Indices beyond the
/// model's `N` contribute nothing.
pub fn decision_value<T: Scalar>(p: &ParamVector<T>, x: &[(usize, f64)]) -> T {
    let w = p.weights();
    x.iter()
        .filter(|(i, _)| *i >= 1 && *i <= w.len())
        .fold(p.bias(), |s, &(i, v)| s + w[i - 1] * T::lit(v))
}

/// `sign(wᵀx + β)` with `sign(0) = +1`.
pub fn predict<T: Scalar>(p: &ParamVector<T>, x: &[(usize, f64)]) -> Label {
    if decision_value(p, x) >= T::zero() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn ctx(rows: &[Vec<f64>], reg: Regularizer<f64>) -> ObjectiveContext<f64> {
        let l = DesignMatrix::from_matrix(DenseMatrix::from_rows(rows).unwrap());
        ObjectiveContext::new(l, reg).unwrap()
    }

    #[test]
    fn squared_hinge_values() {
        assert_eq!(sq_hinge(1.0), 0.0);
        assert_eq!(sq_hinge(0.0), 1.0);
        assert_eq!(sq_hinge(2.0), 0.0);
        assert_eq!(sq_hinge(-1.0), 4.0);
        assert_eq!(sq_hinge_deriv(1.0), 0.0);
        assert_eq!(sq_hinge_deriv(0.0), -2.0);
        assert_eq!(sq_hinge_deriv(3.0), 0.0);
    }

    #[test]
    fn potentials_at_zero() {
        let h = Regularizer::hyperbolic(2.0, 1.0, 0.0);
        assert_eq!(h.potential(0.0), 2.0);
        assert_eq!(h.potential_deriv(0.0), 0.0);
        let w = Regularizer::welsh(1.0, 1.0, 0.0);
        assert_eq!(w.potential(0.0), 0.0);
        assert_eq!(w.potential_deriv(0.0), 0.0);
    }

    #[test]
    fn hyperbolic_derivative_matches_central_difference() {
        let h = Regularizer::<f64>::hyperbolic(1.0, 1.0, 0.0);
        let step = 1e-5;
        let fd = (h.potential(0.7 + step) - h.potential(0.7 - step)) / (2.0 * step);
        assert!((fd - h.potential_deriv(0.7)).abs() < 1e-6);
    }

    #[test]
    fn psi_closed_forms() {
        assert_eq!(Regularizer::hyperbolic(3.0, 2.0, 0.0).psi(0.0), 1.5);
        assert_eq!(Regularizer::welsh(4.0, 2.0, 0.0).psi(0.0), 1.0);
        let v = Regularizer::hyperbolic(1.0, 1.0, 0.0).psi(1.0);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Regularizer::quadratic_only(1.0).psi(0.3), 0.0);
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(Regularizer::hyperbolic(1.0, 0.5, 0.0).lipschitz_a(), 2.0);
        assert_eq!(Regularizer::welsh(1.0, 0.5, 0.0).lipschitz_a(), 4.0);
        assert_eq!(Regularizer::quadratic_only(3.0).lipschitz_a(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(Regularizer::hyperbolic(1.0, 0.0, 0.0).validate().is_err());
        assert!(Regularizer::welsh(-1.0, 1.0, 0.0).validate().is_err());
        assert!(Regularizer::quadratic_only(-1.0).validate().is_err());
        assert!(Regularizer::quadratic_only(0.0).validate().is_ok());
    }

    #[test]
    fn phi_at_zero_counts_samples() {
        let c = ctx(
            &[vec![1.0, 0.0, 1.0], vec![0.0, -1.0, -1.0], vec![2.0, 2.0, 1.0]],
            Regularizer::quadratic_only(0.3),
        );
        assert_eq!(c.phi(&[0.0; 3]).unwrap(), 3.0);
    }

    #[test]
    fn margin_met_with_zero_weights() {
        let c = ctx(&[vec![1.0, 1.0]], Regularizer::quadratic_only(2.0));
        assert_eq!(c.phi(&[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_at_zero_single_sample() {
        let c = ctx(&[vec![1.0, 0.0, 1.0]], Regularizer::quadratic_only(0.5));
        assert_eq!(c.grad(&[0.0; 3]).unwrap().as_slice(), &[-2.0, 0.0, -2.0]);
    }

    #[test]
    fn flat_region_has_zero_gradient() {
        let c = ctx(&[vec![1.0, 1.0], vec![2.0, 1.0]], Regularizer::quadratic_only(0.0));
        assert_eq!(c.grad(&[5.0, 5.0]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn bias_slot_is_never_regularized() {
        let c = ctx(&[vec![1.0, 1.0]], Regularizer::hyperbolic(1.0, 0.1, 3.0));
        // margin 5 keeps the hinge inactive; w = 0 zeroes φ′ and ηw.
        let g = c.grad(&[0.0, 5.0]).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        let g = c.grad(&[0.5, 5.0]).unwrap();
        assert_eq!(g[1], 0.0);
        assert!(g[0] > 0.0);
    }

    #[test]
    fn per_sample_gradients_sum_to_full_without_regularizer() {
        let c = ctx(
            &[vec![1.0, -0.5, 1.0], vec![0.3, 2.0, -1.0], vec![-1.0, 0.0, 1.0]],
            Regularizer::quadratic_only(0.0),
        );
        let theta = [0.2, -0.1, 0.4];
        let full = c.grad(&theta).unwrap();
        let mut sum = DenseVector::zeros(3);
        for k in 0..3 {
            sum.axpy(1.0, &c.grad_k(&theta, k).unwrap());
        }
        for i in 0..3 {
            assert!((full[i] - sum[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn inactive_sample_gradient_is_regularizer_gradient() {
        let reg = Regularizer::welsh(0.5, 0.7, 0.1);
        let c = ctx(&[vec![1.0, 1.0, 1.0]], reg);
        let theta = [2.0, 1.0, 1.0];
        let gk = c.grad_k(&theta, 0).unwrap();
        let mut expected = vec![0.0; 3];
        reg.add_gradient(&theta, &mut expected);
        assert_eq!(gk.as_slice(), expected.as_slice());
        assert!(c.grad_k(&theta, 1).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = ctx(&[vec![1.0, 1.0]], Regularizer::quadratic_only(0.0));
        assert!(matches!(c.phi(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(c.grad(&[0.0; 3]).is_err());
    }

    #[test]
    fn prediction_sign() {
        let p = ParamVector::from(vec![1.0, 0.0, 0.0]);
        assert_eq!(predict(&p, &[(1, 2.0), (2, 5.0)]), 1);
        let p = ParamVector::from(vec![1.0, 0.0, -3.0]);
        assert_eq!(predict(&p, &[(1, 2.0)]), -1);
        let p = ParamVector::from(vec![1.0, 0.0, -2.0]);
        assert_eq!(predict(&p, &[(1, 2.0)]), 1);
    }
}
