//! Linear support vector machines trained by majorization-minimization.
//!
//! The loss is the squared hinge over a label-folded design matrix plus a
//! smooth sparsity-promoting penalty on the weights. Solvers range from plain
//! gradient descent through half-quadratic MM (exact, factorized and subspace
//! variants) to stochastic methods and Adam-warm-started hybrids.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.
//!
//! ```
//! use mmsvm::{dataio, ObjectiveContext, Regularizer, ParamVector, Design};
//! use mmsvm::solvers::{run, Method, SolverConfig};
//!
//! let ds = dataio::parse_libsvm_str("+1 1:1 2:0.5\n-1 1:-1\n+1 2:2\n-1 1:-0.5 2:-1\n", "toy")?;
//! let design = Design::from_dataset(&ds)?;
//! let ctx = ObjectiveContext::new(design, Regularizer::hyperbolic(1e-2, 1e-2, 0.0))?;
//! let mut cfg = SolverConfig::new(Method::Mm);
//! cfg.max_epochs = 20;
//! let (theta, trace) = run(&ctx, &cfg, ParamVector::zeros(ctx.dim()))?;
//! assert!(trace.final_phi() < trace.phi0);
//! assert_eq!(theta.len(), 3);
//! # Ok::<(), mmsvm::Error>(())
//! ```

pub mod dataio;
mod error;
pub mod linalg;
pub mod majorants;
pub mod metrics;
pub mod objective;
pub mod rng;
mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use objective::{ObjectiveContext, ParamVector, Regularizer, RegularizerKind};
pub use scalar::Scalar;

pub type Vector = linalg::DenseVector<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type Design = dataio::DesignMatrix<f64>;
pub type Params = ParamVector<f64>;
pub type Context = ObjectiveContext<f64>;
pub type Reg = Regularizer<f64>;
pub type Config = solvers::SolverConfig<f64>;
pub type Trace = solvers::TrainTrace<f64>;
pub type Factorization = majorants::CurvatureFactorization<f64>;
