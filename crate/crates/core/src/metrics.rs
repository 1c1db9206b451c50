//! Test-set classification metrics, sparsity counts and optimality gaps.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::objective::{predict, ObjectiveContext, ParamVector};
use crate::scalar::Scalar;
use crate::solvers::{step_mm_exact, Method, SolverState, TrainTrace};

/// Default threshold below which a weight counts as zero.
pub const DEFAULT_SPARSITY_TAU: f64 = 1e-4;

/// Gradient tolerance for the reference minimum.
pub const REFERENCE_GRAD_TOL: f64 = 1e-10;

/// Iteration cap for the reference minimum.
pub const REFERENCE_MAX_ITER: usize = 5000;

/// Floor applied to gaps for logarithmic plots.
pub const GAP_FLOOR: f64 = 1e-16;

/// Confusion table with `+1` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion<T: Scalar>(model: &ParamVector<T>, test: &Dataset) -> Result<ConfusionCounts> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut c = ConfusionCounts::default();
    for s in &test.samples {
        match (predict(model, &s.features), s.label > 0) {
            (1, true) => c.tp += 1,
            (1, false) => c.fp += 1,
            (_, true) => c.fn_ += 1,
            (_, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Metrics with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub sparsity_count: usize,
    pub sparsity_total: usize,
}

fn ratio(num: usize, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num as f64 / den)
}

pub fn report<T: Scalar>(
    c: &ConfusionCounts,
    n_test: usize,
    weights: &[T],
    sparsity_tau: T,
) -> MetricReport {
    let (tp, tn, fp, fn_) = (c.tp, c.tn, c.fp, c.fn_);
    MetricReport {
        accuracy: ratio(tp + tn, n_test as f64),
        precision: ratio(tp, (tp + fp) as f64),
        recall: ratio(tp, (tp + fn_) as f64),
        f1: ratio(tp, tp as f64 + (fn_ + fp) as f64 / 2.0),
        sparsity_count: sparsity_count(weights, sparsity_tau),
        sparsity_total: weights.len(),
    }
}

/// `#{i : |wᵢ| ≤ τ}`
pub fn sparsity_count<T: Scalar>(weights: &[T], tau: T) -> usize {
    weights.iter().filter(|w| w.abs() <= tau).count()
}

/// Confusion counts and metrics of `model` on `test`.
pub fn evaluate<T: Scalar>(
    model: &ParamVector<T>,
    test: &Dataset,
    sparsity_tau: T,
) -> Result<(ConfusionCounts, MetricReport)> {
    let c = confusion(model, test)?;
    let r = report(&c, test.len(), model.weights(), sparsity_tau);
    Ok((c, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMinimum<T> {
    pub phi_star: T,
    pub produced_by: Method,
    /// `‖∇Φ(θ*)‖∞`
    pub gradient_norm_at_star: T,
    pub iterations: usize,
    pub theta_star: ParamVector<T>,
}

impl<T: Scalar> ReferenceMinimum<T> {
    /// Whether the gradient tolerance was met before the iteration cap.
    pub fn converged(&self, tol: T) -> bool {
        self.gradient_norm_at_star <= tol
    }
}

/// Exact MM from `θ = 0` until `‖∇Φ‖∞ ≤ 1e−10` or 5000 iterations.
pub fn compute_reference_minimum<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    epsilon: T,
) -> Result<ReferenceMinimum<T>> {
    compute_reference_minimum_with(ctx, epsilon, T::lit(REFERENCE_GRAD_TOL), REFERENCE_MAX_ITER)
}

pub fn compute_reference_minimum_with<T: Scalar>(
    ctx: &ObjectiveContext<T>,
    epsilon: T,
    grad_tol: T,
    max_iter: usize,
) -> Result<ReferenceMinimum<T>> {
    let mut state = SolverState::new(ParamVector::zeros(ctx.dim()), 0, Method::Mm);
    let mut iterations = 0;
    loop {
        let (phi, g) = state.phi_grad(ctx)?;
        let gnorm = g.norm_inf();
        if !phi.is_finite() || !gnorm.is_finite() {
            return Err(state.diverged("non-finite objective"));
        }
        if gnorm <= grad_tol || iterations >= max_iter {
            if gnorm > grad_tol {
                log::warn!(
                    "reference minimum stopped after {iterations} iterations with |grad|_inf = {gnorm:e}"
                );
            }
            return Ok(ReferenceMinimum {
                phi_star: phi,
                produced_by: Method::Mm,
                gradient_norm_at_star: gnorm,
                iterations,
                theta_star: state.theta,
            });
        }
        iterations += 1;
        state.epoch = iterations;
        step_mm_exact(&mut state, ctx, epsilon)?;
    }
}

/// `Φ⁽ⁿ⁾ − φ*` per epoch, raw and floored at [`GAP_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries<T> {
    pub raw: Vec<T>,
    pub clamped: Vec<T>,
}

pub fn optimality_gap<T: Scalar>(trace: &TrainTrace<T>, reference: &ReferenceMinimum<T>) -> GapSeries<T> {
    let raw: Vec<T> = trace.records.iter().map(|r| r.phi - reference.phi_star).collect();
    let floor = T::lit(GAP_FLOOR);
    let clamped = raw.iter().map(|&g| g.max(floor)).collect();
    GapSeries { raw, clamped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Sample;

    fn counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    #[test]
    fn perfect_classifier() {
        let r = report(&counts(5, 5, 0, 0), 10, &[0.0f64], 1e-4);
        assert_eq!(r.accuracy, Some(1.0));
        assert_eq!(r.precision, Some(1.0));
        assert_eq!(r.recall, Some(1.0));
        assert_eq!(r.f1, Some(1.0));
    }

    #[test]
    fn precision_undefined_without_positive_predictions() {
        let r = report(&counts(0, 5, 0, 5), 10, &[1.0f64], 1e-4);
        assert_eq!(r.precision, None);
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.f1, Some(0.0));
    }

    #[test]
    fn hand_computed_metrics() {
        let r = report(&counts(2, 5, 2, 1), 10, &[0.0f64, 1e-5, -2e-4, 3.0], 1e-4);
        assert!((r.accuracy.unwrap() - 0.7).abs() < 1e-15);
        assert!((r.precision.unwrap() - 0.5).abs() < 1e-15);
        assert!((r.recall.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1.unwrap() - 2.0 / 3.5).abs() < 1e-15);
        assert_eq!((r.sparsity_count, r.sparsity_total), (2, 4));
    }

    #[test]
    fn constant_positive_model() {
        let ds = Dataset::new(
            "balanced",
            vec![
                Sample::new(vec![(1, 1.0)], 1),
                Sample::new(vec![(1, 2.0)], 1),
                Sample::new(vec![(1, 3.0)], -1),
                Sample::new(vec![], -1),
            ],
        );
        let model = ParamVector::from(vec![0.0, 1.0]);
        assert_eq!(confusion(&model, &ds).unwrap(), counts(2, 0, 2, 0));
        assert!(confusion(&model, &Dataset::new("empty", vec![])).is_err());
    }

    #[test]
    fn gap_against_reference() {
        let reference = ReferenceMinimum {
            phi_star: 2.0,
            produced_by: Method::Mm,
            gradient_norm_at_star: 0.0,
            iterations: 0,
            theta_star: ParamVector::zeros(2),
        };
        let trace = TrainTrace {
            method: Method::Fg,
            phi0: 3.0,
            records: [2.5, 2.0, 2.0 - 1e-13]
                .iter()
                .enumerate()
                .map(|(i, &phi)| crate::solvers::EpochRecord {
                    epoch: i + 1,
                    phi,
                    grad_norm: 0.0,
                    seconds: 0.0,
                    sample_grads: 0,
                })
                .collect(),
        };
        let gap = optimality_gap(&trace, &reference);
        assert_eq!(gap.raw[0], 0.5);
        assert_eq!(gap.raw[1], 0.0);
        assert!(gap.raw[2] < 0.0);
        assert_eq!(gap.clamped[1], GAP_FLOOR);
        assert_eq!(gap.clamped[2], GAP_FLOOR);
    }
}
