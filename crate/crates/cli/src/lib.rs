//! Command-line front end for the `mmsvm` solvers: configuration resolution,
//! the `train`, `evaluate`, `benchmark` and `refmin` subcommands, and their
//! CSV, text and JSON outputs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod record;
pub mod table;

use std::path::Path;

use crate::args::{Cli, Sub};
use crate::config::{parse_pairs, Command, ExperimentConfig, Pairs};
use crate::error::{CliError, CliResult};
use crate::table::metric;

fn file_pairs(path: Option<&Path>) -> CliResult<Pairs> {
    match path {
        None => Ok(Pairs::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))?;
            parse_pairs(&text)
        }
    }
}

/// Resolves the configuration and runs the subcommand, printing a short
/// summary to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Sub::Train(a) => {
            let cfg = ExperimentConfig::resolve(file_pairs(a.config.as_deref())?, a.pairs())?;
            let o = commands::cmd_train(&cfg)?;
            let r = &o.record;
            println!(
                "{} {}: phi {:e} after {} epochs, accuracy {}, sparsity {}/{}",
                cfg.method,
                cfg.reg_kind,
                o.trace.final_phi(),
                o.trace.len(),
                metric(r.metrics.accuracy),
                r.metrics.sparsity_count,
                r.metrics.sparsity_total,
            );
        }
        Sub::Evaluate(a) => {
            let cfg = ExperimentConfig::resolve(file_pairs(a.config.as_deref())?, a.pairs())?;
            let (c, m) = commands::cmd_evaluate(&cfg)?;
            log::debug!("resolved {:?}", cfg.echo(Command::Evaluate));
            println!(
                "accuracy {} precision {} recall {} f1 {} (tp {} tn {} fp {} fn {})",
                metric(m.accuracy),
                metric(m.precision),
                metric(m.recall),
                metric(m.f1),
                c.tp,
                c.tn,
                c.fp,
                c.fn_,
            );
        }
        Sub::Benchmark(a) => {
            let cfg = ExperimentConfig::resolve(file_pairs(a.run.config.as_deref())?, a.pairs())?;
            let report = commands::cmd_benchmark(&cfg)?;
            let failed = report.cells.iter().filter(|c| c.outcome.is_err()).count();
            println!(
                "{} runs, {failed} failed, outputs in {}",
                report.cells.len(),
                cfg.out.display()
            );
        }
        Sub::Refmin(a) => {
            let cfg = ExperimentConfig::resolve(file_pairs(a.config.as_deref())?, a.pairs())?;
            let r = commands::cmd_refmin(&cfg)?;
            println!(
                "phi* {:e} after {} iterations, |grad|_inf {:e}{}",
                r.phi_star,
                r.iterations,
                r.gradient_norm_inf,
                if r.converged { "" } else { " (iteration cap reached)" },
            );
        }
    }
    Ok(())
}
