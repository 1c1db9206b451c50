//! Single-iteration updates. Each step reads and advances a [`SolverState`].

use crate::error::{Error, Result};
use crate::linalg::{small_pinv_solve, spd_solve, DenseMatrix, DenseVector};
use crate::majorants::{
    apply_abar_inverse, apply_curvature, curvature_a, curvature_diag, sigma_max,
    CurvatureFactorization,
};
use crate::objective::{ObjectiveContext, ParamVector};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

use super::config::{Method, SolverConfig};

/// Mutable iterate and optimizer memory for one run.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub theta: ParamVector<T>,
    /// Previous iterate for the 3MG memory direction; starts at zero.
    pub prev_theta: ParamVector<T>,
    /// Momentum / Adam first moment.
    pub m: DenseVector<T>,
    /// Adam second moment.
    pub v: DenseVector<T>,
    pub epoch: usize,
    /// 1-based Adam step counter after the first Adam step.
    pub adam_step: u64,
    /// Per-sample gradient evaluations so far.
    pub sample_grads: u64,
    pub rng: SplitMix64,
    pub method: Method,
    cache: Option<(T, DenseVector<T>)>,
    batch: Vec<usize>,
    grad_buf: DenseVector<T>,
}

impl<T: Scalar> SolverState<T> {
    pub fn new(theta: ParamVector<T>, seed: u64, method: Method) -> Self {
        let n = theta.len();
        Self {
            prev_theta: ParamVector::zeros(n),
            m: DenseVector::zeros(n),
            v: DenseVector::zeros(n),
            theta,
            epoch: 0,
            adam_step: 0,
            sample_grads: 0,
            rng: SplitMix64::new(seed),
            method,
            cache: None,
            batch: Vec::new(),
            grad_buf: DenseVector::zeros(n),
        }
    }

    /// Clears every memory term, keeping `θ`, the counters and the generator.
    pub fn restart(&mut self, method: Method) {
        let n = self.theta.len();
        self.prev_theta = ParamVector::zeros(n);
        self.m = DenseVector::zeros(n);
        self.v = DenseVector::zeros(n);
        self.adam_step = 0;
        self.method = method;
    }

    /// `Φ(θ)` and `∇Φ(θ)` at the current iterate, evaluated at most once per iterate.
    pub fn phi_grad(&mut self, ctx: &ObjectiveContext<T>) -> Result<(T, &DenseVector<T>)> {
        if self.cache.is_none() {
            let (phi, g) = ctx.phi_and_grad(&self.theta)?;
            self.sample_grads += ctx.samples() as u64;
            self.cache = Some((phi, g));
        }
        let (phi, g) = self.cache.as_ref().expect("filled above");
        Ok((*phi, g))
    }

    fn gradient(&mut self, ctx: &ObjectiveContext<T>) -> Result<DenseVector<T>> {
        let g = self.phi_grad(ctx)?.1.clone();
        if !g.is_finite() {
            return Err(self.diverged("non-finite gradient"));
        }
        Ok(g)
    }

    /// `θ ← θ − d`, remembering the old iterate.
    fn descend(&mut self, d: &[T]) -> Result<()> {
        let mut next = self.theta.clone();
        for (t, &di) in next.iter_mut().zip(d) {
            *t -= di;
        }
        if !next.is_finite() {
            return Err(self.diverged("non-finite iterate"));
        }
        self.prev_theta = std::mem::replace(&mut self.theta, next);
        self.cache = None;
        Ok(())
    }

    pub(crate) fn diverged(&self, reason: impl Into<String>) -> Error {
        Error::Divergence {
            method: self.method.label().to_string(),
            epoch: self.epoch,
            reason: reason.into(),
        }
    }

    /// Averaged minibatch gradient with indices drawn with replacement.
    fn minibatch_gradient(&mut self, ctx: &ObjectiveContext<T>, batch: usize) -> Result<DenseVector<T>> {
        let k = ctx.samples();
        self.batch.clear();
        for _ in 0..batch {
            self.batch.push(self.rng.below(k));
        }
        let mut g = std::mem::take(&mut self.grad_buf);
        if g.len() != ctx.dim() {
            g = DenseVector::zeros(ctx.dim());
        }
        ctx.minibatch_grad(&self.theta, &self.batch, &mut g);
        self.sample_grads += batch as u64;
        if !g.is_finite() {
            self.grad_buf = g;
            return Err(self.diverged("non-finite stochastic gradient"));
        }
        Ok(g)
    }

    fn apply_stochastic(&mut self, g: DenseVector<T>, update: impl Fn(&mut Self, &DenseVector<T>)) -> Result<()> {
        update(self, &g);
        self.grad_buf = g;
        self.cache = None;
        if !self.theta.is_finite() {
            return Err(self.diverged("non-finite iterate"));
        }
        Ok(())
    }
}

/// `θ ← θ − α∇Φ(θ)`.
pub fn step_fg<T: Scalar>(state: &mut SolverState<T>, ctx: &ObjectiveContext<T>, alpha: T) -> Result<()> {
    let mut g = state.gradient(ctx)?;
    g.scale(alpha);
    state.descend(&g)
}

/// `θ ← θ − A(θ)⁻¹∇Φ(θ)` with an SPD solve.
pub fn step_mm_exact<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    epsilon: T,
) -> Result<()> {
    let g = state.gradient(ctx)?;
    let a = curvature_a(ctx, &state.theta, epsilon)?;
    let d = solve_with_ridge(a.a, &g)?;
    state.descend(&d)
}

/// Largest ridge, relative to the largest diagonal entry, tried by
/// [`solve_with_ridge`].
const MAX_RELATIVE_RIDGE: f64 = 1e-6;

/// Solves `A d = g`, adding `τ I` when `A` is only semidefinite in floating
/// point. `A + τI ⪰ A` still majorizes, so descent is kept.
fn solve_with_ridge<T: Scalar>(mut a: DenseMatrix<T>, g: &[T]) -> Result<DenseVector<T>> {
    let first = match spd_solve(&a, g) {
        Err(e @ Error::NotPositiveDefinite { .. }) => e,
        other => return other,
    };
    let n = a.rows();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
    let mut tau = T::epsilon() * T::lit(n as f64) * scale.max(T::min_positive_value());
    let mut added = T::zero();
    while tau <= T::lit(MAX_RELATIVE_RIDGE) * scale {
        for i in 0..n {
            a[(i, i)] += tau - added;
        }
        added = tau;
        match spd_solve(&a, g) {
            Err(Error::NotPositiveDefinite { .. }) => tau *= T::lit(10.0),
            other => return other,
        }
    }
    Err(first)
}

/// `θ ← θ − Ā(θ)⁻¹∇Φ(θ)` through the precomputed factorization.
pub fn step_mm_inversion<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    fact: &CurvatureFactorization<T>,
) -> Result<()> {
    let g = state.gradient(ctx)?;
    let sigma = sigma_max(&ctx.reg, &state.theta, fact.epsilon);
    let d = apply_abar_inverse(fact, sigma, &g)?;
    state.descend(&d)
}

/// Subspace MM: `θ ← θ − D (DᵀAD)† Dᵀ∇Φ` with `D = [−∇Φ | θ − θ_prev]`, or
/// `D = −∇Φ` when `memory` is off.
pub fn step_subspace<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    epsilon: T,
    memory: bool,
) -> Result<()> {
    let g = state.gradient(ctx)?;
    let diag = curvature_diag(&ctx.reg, &state.theta, epsilon);
    let prev = memory.then(|| state.theta.sub(&state.prev_theta));
    let d = subspace_direction(&g, prev.as_deref(), |x| apply_curvature(&ctx.design, &diag, x))?;
    state.descend(&d)
}

/// `D (DᵀAD)† Dᵀg` for `D = [−g | memory]`, with `A` given as an operator.
pub(crate) fn subspace_direction<T: Scalar>(
    g: &[T],
    memory: Option<&[T]>,
    apply_a: impl Fn(&[T]) -> Result<DenseVector<T>>,
) -> Result<DenseVector<T>> {
    let neg_g: DenseVector<T> = g.iter().map(|&x| -x).collect();
    let mut cols = vec![neg_g];
    if let Some(mem) = memory {
        cols.push(DenseVector::from(mem.to_vec()));
    }
    let ad: Vec<DenseVector<T>> = cols.iter().map(|c| apply_a(c)).collect::<Result<_>>()?;
    let m = cols.len();
    let gram = DenseMatrix::from_fn(m, m, |i, j| cols[i].dot(&ad[j]));
    let rhs: Vec<T> = cols.iter().map(|c| c.dot(g)).collect();
    let u = small_pinv_solve(&gram, &rhs)?;
    let mut d = DenseVector::zeros(g.len());
    for (c, &ui) in cols.iter().zip(u.iter()) {
        d.axpy(ui, c);
    }
    Ok(d)
}

/// `θ ← θ − α (1/B) Σ_{i∈ℬ} ∇Φᵢ(θ)`.
pub fn step_sg<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    alpha: T,
    batch: usize,
) -> Result<()> {
    let g = state.minibatch_gradient(ctx, batch)?;
    state.apply_stochastic(g, |s, g| s.theta.axpy(-alpha, g))
}

/// `m ← βm + ∇Φ_κ(θ)`, `θ ← θ − αm`.
pub fn step_momentum<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    alpha: T,
    beta: T,
    batch: usize,
) -> Result<()> {
    let g = state.minibatch_gradient(ctx, batch)?;
    state.apply_stochastic(g, |s, g| {
        s.m.scale(beta);
        s.m.axpy(T::one(), g);
        let m = std::mem::take(&mut s.m);
        s.theta.axpy(-alpha, &m);
        s.m = m;
    })
}

/// Standard Adam recursion with bias-corrected stepsize.
pub fn step_adam<T: Scalar>(
    state: &mut SolverState<T>,
    ctx: &ObjectiveContext<T>,
    cfg: &SolverConfig<T>,
) -> Result<()> {
    let g = state.minibatch_gradient(ctx, cfg.batch_size)?;
    let (b1, b2, eps) = (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epshat);
    state.adam_step += 1;
    let n = state.adam_step.min(i32::MAX as u64) as i32;
    let alpha_n = cfg.alpha * (T::one() - b2.powi(n)).sqrt() / (T::one() - b1.powi(n));
    state.apply_stochastic(g, |s, g| {
        for i in 0..g.len() {
            s.m[i] = b1 * s.m[i] + (T::one() - b1) * g[i];
            s.v[i] = b2 * s.v[i] + (T::one() - b2) * g[i] * g[i];
            s.theta[i] -= alpha_n * s.m[i] / (s.v[i].sqrt() + eps);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::DesignMatrix;
    use crate::objective::Regularizer;

    fn ctx(rows: &[Vec<f64>], reg: Regularizer<f64>) -> ObjectiveContext<f64> {
        let l = DesignMatrix::from_matrix(DenseMatrix::from_rows(rows).unwrap());
        ObjectiveContext::new(l, reg).unwrap()
    }

    fn state(theta: Vec<f64>) -> SolverState<f64> {
        SolverState::new(ParamVector::from(theta), 7, Method::Fg)
    }

    /// Every hinge inactive at `θ = (0, 5)` and no regularizer: `∇Φ = 0`.
    fn flat() -> (ObjectiveContext<f64>, Vec<f64>) {
        (
            ctx(&[vec![1.0, 1.0], vec![-2.0, 1.0]], Regularizer::quadratic_only(0.0)),
            vec![0.0, 5.0],
        )
    }

    #[test]
    fn stationary_point_is_fixed_for_every_step() {
        let (c, theta) = flat();
        let fact = crate::majorants::factorize(&c.design, 1e-4).unwrap();
        let cfg = SolverConfig::new(Method::Adam);
        let steps: Vec<Box<dyn Fn(&mut SolverState<f64>)>> = vec![
            Box::new(|s| step_fg(s, &c, 0.1).unwrap()),
            Box::new(|s| step_mm_exact(s, &c, 1e-4).unwrap()),
            Box::new(|s| step_mm_inversion(s, &c, &fact).unwrap()),
            Box::new(|s| step_subspace(s, &c, 1e-4, true).unwrap()),
            Box::new(|s| step_subspace(s, &c, 1e-4, false).unwrap()),
            Box::new(|s| step_sg(s, &c, 0.1, 2).unwrap()),
            Box::new(|s| step_momentum(s, &c, 0.1, 0.9, 1).unwrap()),
            Box::new(|s| step_adam(s, &c, &cfg).unwrap()),
        ];
        for step in steps {
            let mut s = state(theta.clone());
            step(&mut s);
            assert_eq!(s.theta.as_slice(), theta.as_slice());
        }
    }

    #[test]
    fn momentum_accumulates_geometrically() {
        // A zero design row makes the sampled gradient vanish, isolating the
        // recursion on m.
        let c = ctx(&[vec![0.0, 0.0]], Regularizer::quadratic_only(0.0));
        let mut s = state(vec![0.0, 0.0]);
        s.m = DenseVector::from(vec![1.0, 2.0]);
        step_momentum(&mut s, &c, 0.5, 0.5, 1).unwrap();
        assert_eq!(s.m.as_slice(), &[0.5, 1.0]);
        assert_eq!(s.theta.as_slice(), &[-0.25, -0.5]);
    }

    #[test]
    fn adam_first_step_matches_scalar_recursion() {
        // Single sample, margin 0: per-sample gradient is −2·row.
        let c = ctx(&[vec![1.0, 0.5]], Regularizer::quadratic_only(0.0));
        let mut cfg = SolverConfig::new(Method::Adam);
        cfg.alpha = 0.01;
        let mut s = state(vec![0.0, 0.0]);
        step_adam(&mut s, &c, &cfg).unwrap();
        for (i, &gi) in [-2.0f64, -1.0].iter().enumerate() {
            let m = 0.1 * gi;
            let v = 0.001 * gi * gi;
            let a1 = 0.01 * (1.0f64 - 0.999).sqrt() / (1.0 - 0.9);
            let expected = -a1 * m / (v.sqrt() + 1e-8);
            assert!((s.theta[i] - expected).abs() < 1e-15);
        }
        assert_eq!(s.adam_step, 1);
    }

    #[test]
    fn adam_without_moments_is_sign_like() {
        let c = ctx(&[vec![1.0, 0.5]], Regularizer::quadratic_only(0.0));
        let mut cfg = SolverConfig::new(Method::Adam);
        cfg.alpha = 0.1;
        cfg.adam_beta1 = 0.0;
        cfg.adam_beta2 = 0.0;
        let mut s = state(vec![0.0, 0.0]);
        step_adam(&mut s, &c, &cfg).unwrap();
        assert!((s.theta[0] - 0.1 * 2.0 / (2.0 + 1e-8)).abs() < 1e-15);
        assert!((s.theta[1] - 0.1 * 1.0 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn full_batch_sg_follows_scaled_gradient() {
        let c = ctx(
            &[vec![1.0, -0.5, 1.0], vec![0.3, 2.0, -1.0], vec![-1.0, 0.0, 1.0]],
            Regularizer::quadratic_only(0.0),
        );
        let theta = vec![0.2, -0.1, 0.4];
        let full = c.grad(&theta).unwrap();
        let mut g = DenseVector::zeros(3);
        c.minibatch_grad(&theta, &[0, 1, 2], &mut g);
        for i in 0..3 {
            assert!((g[i] - full[i] / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradmm_is_exact_line_minimum_in_one_dimension() {
        // Φ(θ) = (1 − 2θ)² + ½θ² on θ < 1/2, with the bias column empty.
        let c = ctx(&[vec![2.0, 0.0]], Regularizer::quadratic_only(1.0));
        let mut s = state(vec![0.0, 0.0]);
        step_subspace(&mut s, &c, 1e-4, false).unwrap();
        // Minimizer of the quadratic along −g equals the true minimizer 4/9.
        assert!((s.theta[0] - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(s.theta[1], 0.0);
    }

    #[test]
    fn first_3mg_step_equals_gradient_step() {
        let c = ctx(
            &[vec![1.0, -0.5, 1.0], vec![0.3, 2.0, -1.0], vec![-1.0, 0.0, 1.0]],
            Regularizer::hyperbolic(0.1, 0.2, 0.01),
        );
        let mut a = state(vec![0.0; 3]);
        let mut b = state(vec![0.0; 3]);
        step_subspace(&mut a, &c, 1e-4, true).unwrap();
        step_subspace(&mut b, &c, 1e-4, false).unwrap();
        for i in 0..3 {
            assert!((a.theta[i] - b.theta[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn subspace_with_scaled_identity_is_fg() {
        let g = [0.3f64, -1.2, 0.5];
        let mu = 7.0;
        let d = subspace_direction(&g, None, |x| Ok(x.iter().map(|v| mu * v).collect())).unwrap();
        for i in 0..3 {
            assert!((d[i] - g[i] / mu).abs() < 1e-12);
        }
    }

    #[test]
    fn mmi_matches_explicit_assembly() {
        let c = ctx(
            &[vec![1.0, -0.5, 1.0], vec![0.3, 2.0, -1.0], vec![-1.0, 0.0, 1.0], vec![0.5, 0.5, 1.0]],
            Regularizer::welsh(0.2, 0.5, 0.01),
        );
        let theta = vec![0.3, -0.2, 0.1];
        let fact = crate::majorants::factorize(&c.design, 1e-3).unwrap();
        let mut s = state(theta.clone());
        step_mm_inversion(&mut s, &c, &fact).unwrap();

        let sigma = sigma_max(&c.reg, &theta, 1e-3);
        let mut abar = c.design.gram().scaled(2.0);
        for i in 0..3 {
            abar[(i, i)] += sigma;
        }
        let d = spd_solve(&abar, &c.grad(&theta).unwrap()).unwrap();
        for i in 0..3 {
            assert!((s.theta[i] - (theta[i] - d[i])).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_curvature_gets_a_ridge() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let d = solve_with_ridge(a, &[2.0f64, 2.0]).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-6 && (d[1] - 1.0).abs() < 1e-6);
        let indefinite = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(solve_with_ridge(indefinite, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn divergence_names_method() {
        let c = ctx(&[vec![1.0, 1.0]], Regularizer::quadratic_only(0.0));
        let mut s = state(vec![0.0, 0.0]);
        s.epoch = 3;
        let err = step_fg(&mut s, &c, f64::INFINITY).unwrap_err();
        assert!(matches!(err, Error::Divergence { ref method, epoch: 3, .. } if method == "FG"));
    }
}
