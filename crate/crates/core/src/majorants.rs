//! Quadratic majorants of `Φ`: the descent-lemma constant `μ`, the
//! half-quadratic curvature `A(θ)` and the factorized upper bound `Ā(θ)`.

use crate::dataio::DesignMatrix;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{qr_factorize, sym_eigen, DenseMatrix, DenseVector, QrMode};
use crate::objective::{ObjectiveContext, Regularizer};
use crate::scalar::Scalar;

/// `∇Φ` is `μ`-Lipschitz with `μ = 2‖L‖² + a + η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound<T> {
    pub mu: T,
    pub spectral_norm_sq: T,
    pub a: T,
    pub eta: T,
}

impl<T: Scalar> LipschitzBound<T> {
    pub fn new(spectral_norm_sq: T, reg: &Regularizer<T>) -> Self {
        let a = reg.lipschitz_a();
        Self {
            mu: T::lit(2.0) * spectral_norm_sq + a + reg.eta,
            spectral_norm_sq,
            a,
            eta: reg.eta,
        }
    }

    /// Reuses `max Λ` from an existing factorization as `‖L‖²`.
    pub fn from_factorization(fact: &CurvatureFactorization<T>, reg: &Regularizer<T>) -> Self {
        Self::new(fact.spectral_norm_sq(), reg)
    }
}

pub fn lipschitz_mu<T: Scalar>(
    design: &DesignMatrix<T>,
    reg: &Regularizer<T>,
) -> Result<LipschitzBound<T>> {
    let fact = factorize(design, T::one())?;
    Ok(LipschitzBound::from_factorization(&fact, reg))
}

/// `A(θ) = 2LᵀL + Diag(ψ(w₁)+η, …, ψ(w_N)+η, ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMatrix<T> {
    pub a: DenseMatrix<T>,
}

/// The diagonal part of `A(θ)`.
pub fn curvature_diag<T: Scalar>(reg: &Regularizer<T>, theta: &[T], epsilon: T) -> DenseVector<T> {
    let n = theta.len() - 1;
    DenseVector::from_fn(theta.len(), |i| {
        if i < n {
            reg.psi(theta[i]) + reg.eta
        } else {
            epsilon
        }
    })
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if epsilon > T::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("epsilon must be > 0, got {epsilon}")))
    }
}

pub fn curvature_a<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    theta: &[T],
    epsilon: T,
) -> Result<CurvatureMatrix<T>> {
    check_epsilon(epsilon)?;
    if theta.len() != ctx.dim() {
        return Err(dim_mismatch(ctx.dim(), theta.len()));
    }
    let mut a = ctx.design.gram().scaled(T::lit(2.0));
    for (i, d) in curvature_diag(&ctx.reg, theta, epsilon).iter().enumerate() {
        a[(i, i)] += *d;
    }
    Ok(CurvatureMatrix { a })
}

/// `2Lᵀ(L d) + diag ⊙ d` without forming the Gram matrix.
pub fn apply_curvature<T: Scalar>(
    design: &DesignMatrix<T>,
    diag: &[T],
    d: &[T],
) -> Result<DenseVector<T>> {
    if diag.len() != d.len() {
        return Err(dim_mismatch(diag.len(), d.len()));
    }
    let mut ld = design.apply(d)?;
    ld.scale(T::lit(2.0));
    let mut out = design.apply_t(&ld)?;
    for ((o, &di), &dv) in out.iter_mut().zip(diag).zip(d) {
        *o += di * dv;
    }
    Ok(out)
}

/// `2LᵀL = P Diag(2Λ) Pᵀ`, computed once per design matrix.
#[derive(Debug, Clone)]
pub struct CurvatureFactorization<T> {
    pub p: DenseMatrix<T>,
    pub gram_eigs: DenseVector<T>,
    pub epsilon: T,
}

impl<T: Scalar> CurvatureFactorization<T> {
    pub fn dim(&self) -> usize {
        self.gram_eigs.len()
    }

    /// `‖L‖² = max Λ`.
    pub fn spectral_norm_sq(&self) -> T {
        self.gram_eigs.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

/// `Lᵀ = QR`, `RRᵀ = UΛUᵀ`, `P = QU`.
///
/// When `K < N + 1` only the leading `K × K` block of `RRᵀ` is nonzero; the
/// trailing columns of the full `Q` complete `P` to an orthogonal matrix and
/// the matching entries of `Λ` are zero.
pub fn factorize<T: Scalar>(
    design: &DesignMatrix<T>,
    epsilon: T,
) -> Result<CurvatureFactorization<T>> {
    check_epsilon(epsilon)?;
    let lt = design.matrix().transpose();
    let (n1, k) = lt.shape();
    let qr = qr_factorize(&lt, QrMode::Full)?;
    let r = n1.min(k);

    let rr = DenseMatrix::from_fn(r, r, |i, j| {
        let (ri, rj) = (qr.r.row(i), qr.r.row(j));
        (0..k).fold(T::zero(), |s, c| s + ri[c] * rj[c])
    });
    // The product above is symmetric up to summation order only.
    let rr = DenseMatrix::from_fn(r, r, |i, j| T::lit(0.5) * (rr[(i, j)] + rr[(j, i)]));
    let eig = sym_eigen(&rr)?;

    let mut p = DenseMatrix::zeros(n1, n1);
    for i in 0..n1 {
        let q_row = qr.q.row(i);
        let p_row = p.row_mut(i);
        for j in 0..r {
            p_row[j] = (0..r).fold(T::zero(), |s, c| s + q_row[c] * eig.eigenvectors[(c, j)]);
        }
        p_row[r..n1].copy_from_slice(&q_row[r..n1]);
    }
    let gram_eigs = DenseVector::from_fn(n1, |i| {
        if i < r {
            eig.eigenvalues[i].max(T::zero())
        } else {
            T::zero()
        }
    });
    Ok(CurvatureFactorization {
        p,
        gram_eigs,
        epsilon,
    })
}

/// `σ_max(θ) = max{ψ(w₁)+η, …, ψ(w_N)+η, ε}`.
pub fn sigma_max<T: Scalar>(reg: &Regularizer<T>, theta: &[T], epsilon: T) -> T {
    let n = theta.len().saturating_sub(1);
    theta[..n]
        .iter()
        .fold(epsilon, |m, &w| m.max(reg.psi(w) + reg.eta))
}

/// `Ā⁻¹ b = P Diag(1/(2Λᵢ + σ)) Pᵀ b`.
pub fn apply_abar_inverse<T: Scalar>(
    fact: &CurvatureFactorization<T>,
    sigma: T,
    b: &[T],
) -> Result<DenseVector<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let mut c = fact.p.matvec_t(b)?;
    for (ci, &l) in c.iter_mut().zip(fact.gram_eigs.iter()) {
        *ci /= T::lit(2.0) * l + sigma;
    }
    fact.p.matvec(&c)
}

fn quad_pieces<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    at: &[T],
    x: &[T],
) -> Result<(T, T, DenseVector<T>)> {
    if x.len() != at.len() {
        return Err(dim_mismatch(at.len(), x.len()));
    }
    let (phi, g) = ctx.phi_and_grad(at)?;
    let d = DenseVector::from_fn(x.len(), |i| x[i] - at[i]);
    Ok((phi, g.dot(&d), d))
}

/// `Φ(θ′) + ∇Φ(θ′)ᵀ(θ−θ′) + ½(θ−θ′)ᵀA(θ′)(θ−θ′)` with `θ′ = at`, `θ = x`.
pub fn hq_majorant_value<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    at: &[T],
    x: &[T],
    epsilon: T,
) -> Result<T> {
    check_epsilon(epsilon)?;
    let (phi, lin, d) = quad_pieces(ctx, at, x)?;
    let diag = curvature_diag(&ctx.reg, at, epsilon);
    let ad = apply_curvature(&ctx.design, &diag, &d)?;
    Ok(phi + lin + T::lit(0.5) * ad.dot(&d))
}

/// The same tangent bound with `μ I` in place of `A(θ′)`.
pub fn lipschitz_majorant_value<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    at: &[T],
    x: &[T],
    mu: T,
) -> Result<T> {
    let (phi, lin, d) = quad_pieces(ctx, at, x)?;
    Ok(phi + lin + T::lit(0.5) * mu * d.dot(&d))
}
