use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optimization scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Gradient descent with a constant stepsize.
    Fg,
    /// Half-quadratic MM with an exact SPD solve per iteration.
    Mm,
    /// MM with the factorized upper bound `Ā(θ)`.
    Mmi,
    /// Subspace MM with memory (3MG).
    Sub,
    /// Subspace MM along `−∇Φ` only.
    GradMm,
    Sg,
    Momentum,
    Adam,
    /// Adam warm-up followed by [`Method::Mm`].
    HybridMm,
    /// Adam warm-up followed by [`Method::Mmi`].
    HybridMmi,
    /// Adam warm-up followed by [`Method::Sub`].
    HybridSub,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Fg,
        Method::Mm,
        Method::Mmi,
        Method::Sub,
        Method::GradMm,
        Method::Sg,
        Method::Momentum,
        Method::Adam,
        Method::HybridMm,
        Method::HybridMmi,
        Method::HybridSub,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Fg => "FG",
            Method::Mm => "MM",
            Method::Mmi => "MMI",
            Method::Sub => "SUB",
            Method::GradMm => "GRADMM",
            Method::Sg => "SG",
            Method::Momentum => "MOMENTUM",
            Method::Adam => "ADAM",
            Method::HybridMm => "H-MM",
            Method::HybridMmi => "H-MMI",
            Method::HybridSub => "H-SUB",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Sg | Method::Momentum | Method::Adam)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, Method::HybridMm | Method::HybridMmi | Method::HybridSub)
    }

    /// The method run after the warm-up, or `self` for non-hybrids.
    pub fn deterministic_phase(self) -> Method {
        match self {
            Method::HybridMm => Method::Mm,
            Method::HybridMmi => Method::Mmi,
            Method::HybridSub => Method::Sub,
            m => m,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "fg" => Method::Fg,
            "mm" => Method::Mm,
            "mmi" => Method::Mmi,
            "sub" | "3mg" => Method::Sub,
            "gradmm" => Method::GradMm,
            "sg" | "sgd" => Method::Sg,
            "momentum" => Method::Momentum,
            "adam" => Method::Adam,
            "hmm" | "hybridmm" => Method::HybridMm,
            "hmmi" | "hybridmmi" => Method::HybridMmi,
            "hsub" | "hybridsub" => Method::HybridSub,
            _ => return Err(Error::InvalidConfig(format!("unknown method {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub method: Method,
    /// Stepsize for FG (when not automatic) and for the stochastic methods.
    pub alpha: T,
    pub max_epochs: usize,
    pub warmup_iota: usize,
    pub momentum_beta: T,
    pub adam_beta1: T,
    pub adam_beta2: T,
    pub adam_epshat: T,
    pub batch_size: usize,
    pub seed: u64,
    pub epsilon_curv: T,
    /// FG uses `α = 1.9/μ` and ignores `alpha`.
    pub fg_alpha_auto: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub const DEFAULT_EPOCHS: usize = 100;
    pub const DEFAULT_IOTA: usize = 10;

    /// Default stepsize for `method`; tuned on the benchmark problems.
    pub fn default_alpha(method: Method) -> T {
        T::lit(match method {
            Method::Sg => 3e-3,
            Method::Momentum => 3e-4,
            _ => 1e-3,
        })
    }

    pub fn new(method: Method) -> Self {
        Self {
            method,
            alpha: Self::default_alpha(method),
            max_epochs: Self::DEFAULT_EPOCHS,
            warmup_iota: Self::DEFAULT_IOTA,
            momentum_beta: T::lit(0.9),
            adam_beta1: T::lit(0.9),
            adam_beta2: T::lit(0.999),
            adam_epshat: T::lit(1e-8),
            batch_size: 1,
            seed: 0,
            epsilon_curv: T::lit(1e-4),
            fg_alpha_auto: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let uses_alpha = self.method.is_stochastic()
            || self.method.is_hybrid()
            || (self.method == Method::Fg && !self.fg_alpha_auto);
        if uses_alpha && !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        let unit = |x: T| x >= T::zero() && x < T::one();
        if !unit(self.momentum_beta) {
            return bad(format!("momentum beta must lie in [0, 1), got {}", self.momentum_beta));
        }
        if !unit(self.adam_beta1) || !unit(self.adam_beta2) {
            return bad(format!(
                "adam betas must lie in [0, 1), got {} and {}",
                self.adam_beta1, self.adam_beta2
            ));
        }
        if !(self.adam_epshat > T::zero()) {
            return bad(format!("adam epsilon must be > 0, got {}", self.adam_epshat));
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if !(self.epsilon_curv > T::zero() && self.epsilon_curv.is_finite()) {
            return bad(format!("curvature epsilon must be > 0, got {}", self.epsilon_curv));
        }
        if self.method.is_hybrid() && self.max_epochs > 0 && self.warmup_iota >= self.max_epochs {
            return bad(format!(
                "warm-up length {} must be below the epoch budget {}",
                self.warmup_iota, self.max_epochs
            ));
        }
        Ok(())
    }
}
