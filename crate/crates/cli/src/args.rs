//! Command-line flags. Values stay strings here and are parsed together
//! with config-file values, so both sources report errors the same way.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Pairs;

#[derive(Debug, Parser)]
#[command(name = "mmsvm", version, about = "Sparse linear SVMs trained by majorization-minimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Train one model, evaluate it on the test set and write its trace.
    Train(RunArgs),
    /// Score a saved model on a LIBSVM file.
    Evaluate(EvalArgs),
    /// Run the method x regularizer matrix, or a lambda sweep.
    Benchmark(BenchArgs),
    /// Compute the reference minimum used for optimality gaps.
    Refmin(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training data in LIBSVM format.
    #[arg(long)]
    pub data: Option<String>,
    /// Separate test file; without it the data is split.
    #[arg(long)]
    pub test_data: Option<String>,
    /// Training fraction of the seeded split [default: 0.8].
    #[arg(long)]
    pub split: Option<String>,
    /// Seed for the split and the stochastic solvers [default: 0].
    #[arg(long)]
    pub seed: Option<String>,
    /// Feature count N [default: largest index seen].
    #[arg(long)]
    pub num_features: Option<String>,
    /// FG, MM, MMI, SUB, GRADMM, SG, MOMENTUM, ADAM, H-MM, H-MMI or H-SUB [default: H-MM].
    #[arg(long)]
    pub method: Option<String>,
    /// l2, hyperbolic or welsh [default: hyperbolic].
    #[arg(long)]
    pub reg: Option<String>,
    /// Potential weight [default: 1e-4].
    #[arg(long)]
    pub lambda: Option<String>,
    /// Potential scale [default: 1e-4].
    #[arg(long)]
    pub delta: Option<String>,
    /// Quadratic weight [default: 1e-4 for l2, else 0].
    #[arg(long)]
    pub eta: Option<String>,
    /// Stepsize, or `auto` [default: 1.9/mu for FG, tuned per stochastic method].
    #[arg(long)]
    pub alpha: Option<String>,
    /// Epoch budget [default: 100].
    #[arg(long)]
    pub epochs: Option<String>,
    /// Adam warm-up epochs of the hybrids [default: 10].
    #[arg(long)]
    pub iota: Option<String>,
    /// Minibatch size of the stochastic phases [default: 1].
    #[arg(long)]
    pub batch: Option<String>,
    /// Curvature added to the bias slot [default: 1e-4].
    #[arg(long)]
    pub eps_curv: Option<String>,
    /// Magnitude below which a weight counts as zero [default: 1e-4].
    #[arg(long)]
    pub sparsity_tau: Option<String>,
    /// Reference-minimum file, or `compute`; adds a gap column to the trace.
    #[arg(long)]
    pub refmin: Option<String>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated method columns [default: FG,MMI,H-MMI,MM,H-MM,SUB,H-SUB].
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated regularizer rows [default: hyperbolic,welsh,l2].
    #[arg(long)]
    pub regs: Option<String>,
    /// Comma-separated lambdas; switches to a sweep of --method and --reg.
    #[arg(long)]
    pub lambdas: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: Option<String>,
    /// Dataset in LIBSVM format.
    #[arg(long)]
    pub data: Option<String>,
    /// Expected feature count; must agree with the model.
    #[arg(long)]
    pub num_features: Option<String>,
    /// Magnitude below which a weight counts as zero [default: 1e-4].
    #[arg(long)]
    pub sparsity_tau: Option<String>,
    /// Output directory for report.csv [default: out].
    #[arg(long)]
    pub out: Option<String>,
}

fn collect(items: &[(&str, &Option<String>)]) -> Pairs {
    items
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
}

impl RunArgs {
    pub fn pairs(&self) -> Pairs {
        collect(&[
            ("data", &self.data),
            ("test_data", &self.test_data),
            ("split", &self.split),
            ("seed", &self.seed),
            ("num_features", &self.num_features),
            ("method", &self.method),
            ("reg", &self.reg),
            ("lambda", &self.lambda),
            ("delta", &self.delta),
            ("eta", &self.eta),
            ("alpha", &self.alpha),
            ("epochs", &self.epochs),
            ("iota", &self.iota),
            ("batch", &self.batch),
            ("eps_curv", &self.eps_curv),
            ("sparsity_tau", &self.sparsity_tau),
            ("refmin", &self.refmin),
            ("out", &self.out),
        ])
    }
}

impl BenchArgs {
    pub fn pairs(&self) -> Pairs {
        let mut p = self.run.pairs();
        p.extend(collect(&[
            ("methods", &self.methods),
            ("regs", &self.regs),
            ("lambdas", &self.lambdas),
        ]));
        p
    }
}

impl EvalArgs {
    pub fn pairs(&self) -> Pairs {
        collect(&[
            ("model", &self.model),
            ("data", &self.data),
            ("num_features", &self.num_features),
            ("sparsity_tau", &self.sparsity_tau),
            ("out", &self.out),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_pairs() {
        let cli = Cli::try_parse_from([
            "mmsvm", "benchmark", "--data", "a1a", "--eps-curv", "1e-3", "--lambdas", "0.1,0.01",
        ])
        .unwrap();
        let Sub::Benchmark(b) = cli.command else { panic!("wrong subcommand") };
        let p = b.pairs();
        assert_eq!(p["data"], "a1a");
        assert_eq!(p["eps_curv"], "1e-3");
        assert_eq!(p["lambdas"], "0.1,0.01");
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn unknown_flags_fail_to_parse() {
        assert!(Cli::try_parse_from(["mmsvm", "train", "--bogus", "1"]).is_err());
    }
}
