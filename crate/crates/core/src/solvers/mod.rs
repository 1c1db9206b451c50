//! Iterative schemes for minimizing `Φ` and the epoch loop that drives them.
//!
//! Deterministic methods take one iteration per epoch. Stochastic methods take
//! `⌈K/B⌉` minibatch steps per epoch. Hybrids run `ι` Adam epochs and then
//! restart the named deterministic method from the warm-up iterate.

mod config;
mod steps;

use std::sync::Arc;
use std::time::{Duration, Instant};

pub use config::{Method, SolverConfig};
pub use steps::{
    step_adam, step_fg, step_mm_exact, step_mm_inversion, step_momentum, step_sg, step_subspace,
    SolverState,
};

use crate::error::{dim_mismatch, Error, Result};
use crate::majorants::{factorize, CurvatureFactorization, LipschitzBound};
use crate::objective::{ObjectiveContext, ParamVector};
use crate::scalar::Scalar;

/// Relative slack allowed when checking that a deterministic epoch did not
/// increase `Φ`.
pub const MONOTONE_TOL: f64 = 1e-12;

/// `Φ` may grow to this multiple of `max(Φ(θ₀), 1)` before a run is declared
/// divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Automatic FG stepsize as a multiple of `1/μ`.
pub const FG_AUTO_FACTOR: f64 = 1.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    pub phi: T,
    /// Euclidean norm of the full gradient at the end of the epoch.
    pub grad_norm: T,
    /// Cumulative solver wall-clock time, excluding trace-only evaluations.
    pub seconds: f64,
    /// Cumulative per-sample gradient evaluations.
    pub sample_grads: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace<T> {
    pub method: Method,
    pub phi0: T,
    pub records: Vec<EpochRecord<T>>,
}

impl<T: Scalar> TrainTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_phi(&self) -> T {
        self.records.last().map_or(self.phi0, |r| r.phi)
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.seconds)
    }

    pub fn phis(&self) -> Vec<T> {
        self.records.iter().map(|r| r.phi).collect()
    }
}

/// Runs `cfg.method` from `theta0` for `cfg.max_epochs` epochs.
pub fn run<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    cfg: &SolverConfig<T>,
    theta0: ParamVector<T>,
) -> Result<(ParamVector<T>, TrainTrace<T>)> {
    run_with_factorization(ctx, cfg, theta0, None)
}

/// [`run`] reusing a factorization of the same design matrix when one is
/// available. Its construction time is then not charged to the run.
pub fn run_with_factorization<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    cfg: &SolverConfig<T>,
    theta0: ParamVector<T>,
    fact: Option<Arc<CurvatureFactorization<T>>>,
) -> Result<(ParamVector<T>, TrainTrace<T>)> {
    cfg.validate()?;
    if theta0.len() != ctx.dim() {
        return Err(dim_mismatch(ctx.dim(), theta0.len()));
    }
    let method = cfg.method;
    let phi0 = ctx.phi(&theta0)?;
    let mut trace = TrainTrace {
        method,
        phi0,
        records: Vec::with_capacity(cfg.max_epochs),
    };
    if cfg.max_epochs == 0 {
        return Ok((theta0, trace));
    }

    let mut state = SolverState::new(
        theta0,
        cfg.seed,
        if method.is_hybrid() { Method::Adam } else { method },
    );
    if !phi0.is_finite() {
        return Err(state.diverged("non-finite initial objective"));
    }
    let limit = T::lit(DIVERGENCE_FACTOR) * phi0.max(T::one());
    let warmup = if method.is_hybrid() { cfg.warmup_iota } else { 0 };
    let det = method.deterministic_phase();
    let steps_per_epoch = ctx.samples().div_ceil(cfg.batch_size);

    let mut elapsed = Duration::ZERO;
    let started = Instant::now();
    let fact = match (det, fact) {
        (Method::Mmi | Method::Fg, Some(f)) => Some(f),
        (Method::Mmi | Method::Fg, None) => {
            let f = Arc::new(factorize(&ctx.design, cfg.epsilon_curv)?);
            elapsed += started.elapsed();
            Some(f)
        }
        _ => None,
    };
    let fg_alpha = match &fact {
        Some(f) if det == Method::Fg => {
            let mu = LipschitzBound::from_factorization(f, &ctx.reg).mu;
            let alpha = if cfg.fg_alpha_auto { T::lit(FG_AUTO_FACTOR) / mu } else { cfg.alpha };
            Some((alpha, alpha < T::lit(2.0) / mu))
        }
        _ => None,
    };

    let mut prev_phi = phi0;
    for epoch in 1..=cfg.max_epochs {
        state.epoch = epoch;
        let in_warmup = epoch <= warmup;
        if method.is_hybrid() && epoch == warmup + 1 {
            state.restart(det);
        }
        let phase = if in_warmup { Method::Adam } else { det };

        let t0 = Instant::now();
        let mut checked_descent = true;
        match phase {
            Method::Sg | Method::Momentum | Method::Adam => {
                checked_descent = false;
                for _ in 0..steps_per_epoch {
                    match phase {
                        Method::Sg => step_sg(&mut state, ctx, cfg.alpha, cfg.batch_size)?,
                        Method::Momentum => step_momentum(
                            &mut state,
                            ctx,
                            cfg.alpha,
                            cfg.momentum_beta,
                            cfg.batch_size,
                        )?,
                        _ => step_adam(&mut state, ctx, cfg)?,
                    }
                }
            }
            Method::Fg => {
                let (alpha, safe) = fg_alpha.expect("prepared for FG");
                checked_descent = safe;
                step_fg(&mut state, ctx, alpha)?;
            }
            Method::Mm => step_mm_exact(&mut state, ctx, cfg.epsilon_curv)?,
            Method::Mmi => step_mm_inversion(
                &mut state,
                ctx,
                fact.as_deref().expect("prepared for MMI"),
            )?,
            Method::Sub => step_subspace(&mut state, ctx, cfg.epsilon_curv, true)?,
            Method::GradMm => step_subspace(&mut state, ctx, cfg.epsilon_curv, false)?,
            Method::HybridMm | Method::HybridMmi | Method::HybridSub => {
                unreachable!("hybrids resolve to a phase")
            }
        }
        let step_time = t0.elapsed();

        // Deterministic phases reuse this evaluation in their next step.
        let t1 = Instant::now();
        let counted = state.sample_grads;
        let (phi, grad_norm) = {
            let (phi, g) = state.phi_grad(ctx)?;
            (phi, g.norm())
        };
        elapsed += step_time;
        if phase.is_stochastic() {
            // Trace-only evaluation: not charged to the method.
            state.sample_grads = counted;
        } else {
            elapsed += t1.elapsed();
        }

        if !phi.is_finite() || !grad_norm.is_finite() {
            return Err(state.diverged("non-finite objective or gradient"));
        }
        if phi > limit {
            return Err(state.diverged(format!(
                "objective {phi:e} exceeds {limit:e}"
            )));
        }
        if checked_descent && phi > prev_phi + T::lit(MONOTONE_TOL) * (T::one() + prev_phi.abs()) {
            return Err(Error::MonotonicityViolation {
                method: method.label().to_string(),
                epoch,
                previous: prev_phi.to_f64_lossy(),
                current: phi.to_f64_lossy(),
            });
        }
        prev_phi = phi;
        trace.records.push(EpochRecord {
            epoch,
            phi,
            grad_norm,
            seconds: elapsed.as_secs_f64(),
            sample_grads: state.sample_grads,
        });
        log::debug!("{method} epoch {epoch}: phi = {phi:e}, |grad| = {grad_norm:e}");
    }
    Ok((state.theta, trace))
}
