//! Serializable run records and the reference-minimum file.

use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mmsvm::metrics::{ConfusionCounts, MetricReport, ReferenceMinimum};
use mmsvm::{Reg, RegularizerKind, Trace};

use crate::config::Pairs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub num_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl From<ConfusionCounts> for Confusion {
    fn from(c: ConfusionCounts) -> Self {
        Self { tp: c.tp, tn: c.tn, fp: c.fp, fn_: c.fn_ }
    }
}

/// Test-set metrics; `null` marks a metric with a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub sparsity_count: usize,
    pub sparsity_total: usize,
}

impl From<MetricReport> for Metrics {
    fn from(r: MetricReport) -> Self {
        Self {
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            sparsity_count: r.sparsity_count,
            sparsity_total: r.sparsity_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub phi: f64,
    pub grad_norm: f64,
    pub seconds: f64,
    pub sample_grads: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub method: String,
    pub phi0: f64,
    pub epochs: Vec<EpochRow>,
}

impl TraceRecord {
    pub fn new(trace: &Trace, phi_star: Option<f64>) -> Self {
        Self {
            method: trace.method.to_string(),
            phi0: trace.phi0,
            epochs: trace
                .records
                .iter()
                .map(|r| EpochRow {
                    epoch: r.epoch,
                    phi: r.phi,
                    grad_norm: r.grad_norm,
                    seconds: r.seconds,
                    sample_grads: r.sample_grads,
                    gap: phi_star.map(|s| r.phi - s),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Wall-clock seconds spent inside the solver.
    pub train_seconds: f64,
    /// Whole command, including I/O and evaluation.
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub phi_star: f64,
    pub produced_by: String,
    pub iterations: usize,
    pub gradient_norm_inf: f64,
}

/// Everything a training run produced. Equality ignores wall-clock fields,
/// so two runs with the same config and seed compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: Pairs,
    pub dataset: DatasetInfo,
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub trace: TraceRecord,
    pub reference: Option<ReferenceInfo>,
    pub timing: Timing,
}

impl RunRecord {
    fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.timing = Timing { train_seconds: 0.0, total_seconds: 0.0 };
        for e in &mut r.trace.epochs {
            e.seconds = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records contain only finite numbers")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("run record: {e}")))
    }
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.without_timing(), other.without_timing());
        a.config == b.config
            && a.dataset == b.dataset
            && a.confusion == b.confusion
            && a.metrics == b.metrics
            && a.trace == b.trace
            && a.reference == b.reference
    }
}

/// Reference minimum plus the problem it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RefminFile {
    pub phi_star: f64,
    pub produced_by: String,
    pub iterations: usize,
    pub gradient_norm_inf: f64,
    pub converged: bool,
    pub dataset: String,
    pub samples: usize,
    pub num_features: usize,
    pub reg: Reg,
    pub eps_curv: f64,
}

const REFMIN_MAGIC: &str = "# mmsvm reference minimum";

impl RefminFile {
    pub fn new(
        r: &ReferenceMinimum<f64>,
        dataset: &str,
        samples: usize,
        num_features: usize,
        reg: Reg,
        eps_curv: f64,
    ) -> Self {
        Self {
            phi_star: r.phi_star,
            produced_by: r.produced_by.to_string(),
            iterations: r.iterations,
            gradient_norm_inf: r.gradient_norm_at_star,
            converged: r.converged(mmsvm::metrics::REFERENCE_GRAD_TOL),
            dataset: dataset.to_string(),
            samples,
            num_features,
            reg,
            eps_curv,
        }
    }

    pub fn info(&self) -> ReferenceInfo {
        ReferenceInfo {
            phi_star: self.phi_star,
            produced_by: self.produced_by.clone(),
            iterations: self.iterations,
            gradient_norm_inf: self.gradient_norm_inf,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{REFMIN_MAGIC}");
        let _ = writeln!(s, "phi_star = {:e}", self.phi_star);
        let _ = writeln!(s, "produced_by = {}", self.produced_by);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "gradient_norm_inf = {:e}", self.gradient_norm_inf);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "dataset = {}", self.dataset);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "num_features = {}", self.num_features);
        let _ = writeln!(s, "reg = {}", self.reg.kind);
        let _ = writeln!(s, "lambda = {:e}", self.reg.lambda);
        let _ = writeln!(s, "delta = {:e}", self.reg.delta);
        let _ = writeln!(s, "eta = {:e}", self.reg.eta);
        let _ = writeln!(s, "eps_curv = {:e}", self.eps_curv);
        s
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let bad = |m: String| CliError::Io(format!("reference file: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(REFMIN_MAGIC) {
            return Err(bad("missing header line".into()));
        }
        let mut map = Pairs::new();
        for line in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, found {line:?}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| map.get(k).ok_or_else(|| bad(format!("{k} missing")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> CliResult<T> {
            v.parse()
                .map_err(|_| CliError::Io(format!("reference file: invalid {k} {v:?}")))
        }
        let kind: RegularizerKind = get("reg")?.parse().map_err(|e: mmsvm::Error| bad(e.to_string()))?;
        Ok(Self {
            phi_star: num("phi_star", get("phi_star")?)?,
            produced_by: get("produced_by")?.clone(),
            iterations: num("iterations", get("iterations")?)?,
            gradient_norm_inf: num("gradient_norm_inf", get("gradient_norm_inf")?)?,
            converged: num("converged", get("converged")?)?,
            dataset: get("dataset")?.clone(),
            samples: num("samples", get("samples")?)?,
            num_features: num("num_features", get("num_features")?)?,
            reg: Reg {
                kind,
                lambda: num("lambda", get("lambda")?)?,
                delta: num("delta", get("delta")?)?,
                eta: num("eta", get("eta")?)?,
            },
            eps_curv: num("eps_curv", get("eps_curv")?)?,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text)
    }

    /// Rejects a reference computed for a different problem.
    pub fn check_matches(&self, samples: usize, num_features: usize, reg: &Reg) -> CliResult<()> {
        if self.samples != samples || self.num_features != num_features || self.reg != *reg {
            return Err(CliError::usage(format!(
                "reference minimum was computed for {} samples, {} features and {:?}; \
                 this run has {samples} samples, {num_features} features and {reg:?}",
                self.samples, self.num_features, self.reg
            )));
        }
        Ok(())
    }
}
