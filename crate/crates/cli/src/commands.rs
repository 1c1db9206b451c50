//! The four subcommands. Each one computes everything first and writes its
//! outputs only once nothing can fail any more.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use mmsvm::dataio::{split, Dataset, SplitSpec};
use mmsvm::majorants::factorize;
use mmsvm::metrics::{compute_reference_minimum, evaluate, GAP_FLOOR};
use mmsvm::solvers::{run_with_factorization, Method};
use mmsvm::{Context, Design, Factorization, Params, Reg, RegularizerKind, Trace};

use crate::config::{render_pairs, Command, ExperimentConfig, RefminSource};
use crate::error::{CliError, CliResult};
use crate::model::ModelFile;
use crate::record::{Confusion, DatasetInfo, Metrics, RefminFile, RunRecord, Timing, TraceRecord};
use crate::table::{metric, num, write_file, Table, FAILED};

/// Environment variable capping benchmark parallelism.
pub const THREADS_ENV: &str = "MMSVM_THREADS";

/// Training and test sets sharing one feature space, plus the training
/// design matrix.
#[derive(Debug, Clone)]
pub struct Problem {
    pub train: Dataset,
    pub test: Dataset,
    pub design: Arc<Design>,
}

impl Problem {
    /// Uses `test` when given, otherwise splits `train`. Both sides are
    /// widened to `num_features`, or to the larger of their own counts.
    pub fn from_datasets(
        train: Dataset,
        test: Option<Dataset>,
        spec: SplitSpec,
        num_features: Option<usize>,
    ) -> CliResult<Self> {
        let n = num_features.unwrap_or_else(|| {
            train
                .num_features
                .max(test.as_ref().map_or(0, |t| t.num_features))
        });
        let train = train.with_num_features(n)?;
        let (train, test) = match test {
            Some(t) => (train, t.with_num_features(n)?),
            None => split(&train, spec)?,
        };
        if test.is_empty() {
            return Err(CliError::usage("the test set is empty; lower split or pass test_data"));
        }
        train.warn_if_single_class();
        let design = Arc::new(Design::from_dataset(&train)?);
        Ok(Self { train, test, design })
    }

    pub fn load(cfg: &ExperimentConfig) -> CliResult<Self> {
        let path = cfg
            .data
            .as_ref()
            .ok_or_else(|| CliError::usage("no training data given (data)"))?;
        let train = Dataset::from_path(path)?;
        let test = cfg.test_data.as_ref().map(Dataset::from_path).transpose()?;
        let spec = SplitSpec { train_fraction: cfg.split, seed: cfg.seed };
        Self::from_datasets(train, test, spec, cfg.num_features)
    }

    pub fn num_features(&self) -> usize {
        self.train.num_features
    }

    pub fn context(&self, reg: Reg) -> CliResult<Context> {
        Ok(Context::new(Arc::clone(&self.design), reg)?)
    }

    pub fn info(&self) -> DatasetInfo {
        DatasetInfo {
            name: self.train.name.clone(),
            train_samples: self.train.len(),
            test_samples: self.test.len(),
            num_features: self.num_features(),
        }
    }
}

/// Model, record and raw trace of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub record: RunRecord,
    pub trace: Trace,
}

fn needs_factorization(m: Method) -> bool {
    matches!(m.deterministic_phase(), Method::Mmi | Method::Fg)
}

/// Trains `cfg.method` with `cfg`'s regularizer and evaluates on the test set.
pub fn train_problem(
    cfg: &ExperimentConfig,
    problem: &Problem,
    reference: Option<&RefminFile>,
    fact: Option<Arc<Factorization>>,
) -> CliResult<TrainOutcome> {
    let started = Instant::now();
    let reg = cfg.regularizer()?;
    let solver = cfg.solver_config(cfg.method)?;
    let ctx = problem.context(reg)?;
    let (theta, trace) = run_with_factorization(&ctx, &solver, Params::zeros(ctx.dim()), fact)?;
    let (counts, report) = evaluate(&theta, &problem.test, cfg.sparsity_tau)?;
    let record = RunRecord {
        config: cfg.echo(Command::Train),
        dataset: problem.info(),
        confusion: Confusion::from(counts),
        metrics: Metrics::from(report),
        trace: TraceRecord::new(&trace, reference.map(|r| r.phi_star)),
        reference: reference.map(RefminFile::info),
        timing: Timing {
            train_seconds: trace.total_seconds(),
            total_seconds: started.elapsed().as_secs_f64(),
        },
    };
    let model = ModelFile { theta, reg, method: cfg.method.to_string() };
    Ok(TrainOutcome { model, record, trace })
}

pub fn reference_minimum(cfg: &ExperimentConfig, problem: &Problem, reg: Reg) -> CliResult<RefminFile> {
    let ctx = problem.context(reg)?;
    let r = compute_reference_minimum(&ctx, cfg.eps_curv)?;
    Ok(RefminFile::new(
        &r,
        &problem.train.name,
        problem.train.len(),
        problem.num_features(),
        reg,
        cfg.eps_curv,
    ))
}

fn resolve_reference(cfg: &ExperimentConfig, problem: &Problem) -> CliResult<Option<RefminFile>> {
    let reg = cfg.regularizer()?;
    match &cfg.refmin {
        None => Ok(None),
        Some(RefminSource::Compute) => reference_minimum(cfg, problem, reg).map(Some),
        Some(RefminSource::File(p)) => {
            let r = RefminFile::load(p)?;
            r.check_matches(problem.train.len(), problem.num_features(), &reg)?;
            Ok(Some(r))
        }
    }
}

pub fn trace_table(trace: &TraceRecord) -> Table {
    let with_gap = trace.epochs.first().is_some_and(|e| e.gap.is_some());
    let mut header = vec!["epoch", "phi", "grad_norm", "seconds"];
    if with_gap {
        header.push("gap");
    }
    let mut t = Table::new(header);
    for e in &trace.epochs {
        let mut row = vec![e.epoch.to_string(), num(e.phi), num(e.grad_norm), num(e.seconds)];
        if let Some(g) = e.gap {
            row.push(num(g));
        }
        t.push(row);
    }
    t
}

pub fn report_table(c: &Confusion, m: &Metrics) -> Table {
    let mut t = Table::new(["metric", "value"]);
    for (k, v) in [
        ("accuracy", metric(m.accuracy)),
        ("precision", metric(m.precision)),
        ("recall", metric(m.recall)),
        ("f1", metric(m.f1)),
        ("sparsity_count", m.sparsity_count.to_string()),
        ("sparsity_total", m.sparsity_total.to_string()),
        ("tp", c.tp.to_string()),
        ("tn", c.tn.to_string()),
        ("fp", c.fp.to_string()),
        ("fn", c.fn_.to_string()),
    ] {
        t.push(vec![k.to_string(), v]);
    }
    t
}

fn write_json(path: &Path, record: &RunRecord) -> CliResult<()> {
    write_file(path, &record.to_json())
}

/// `train`: writes `trace.csv`, `model.txt`, `report.csv`, `record.json`
/// and `config.txt` into the output directory.
pub fn cmd_train(cfg: &ExperimentConfig) -> CliResult<TrainOutcome> {
    let started = Instant::now();
    let problem = Problem::load(cfg)?;
    let reference = resolve_reference(cfg, &problem)?;
    let mut outcome = train_problem(cfg, &problem, reference.as_ref(), None)?;
    outcome.record.timing.total_seconds = started.elapsed().as_secs_f64();

    let out = &cfg.out;
    let rec = &outcome.record;
    trace_table(&rec.trace).write(&out.join("trace.csv"))?;
    report_table(&rec.confusion, &rec.metrics).write(&out.join("report.csv"))?;
    write_file(&out.join("model.txt"), &outcome.model.render())?;
    write_file(&out.join("config.txt"), &render_pairs(&rec.config))?;
    write_json(&out.join("record.json"), rec)?;
    Ok(outcome)
}

/// `evaluate`: scores a saved model on a dataset and writes `report.csv`.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> CliResult<(Confusion, Metrics)> {
    let model_path = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::usage("no model file given (model)"))?;
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::usage("no dataset given (data)"))?;
    let model = ModelFile::load(model_path)?;
    let ds = Dataset::from_path(data)?;
    let n = model.num_features();
    if let Some(k) = cfg.num_features.filter(|&k| k != n) {
        return Err(CliError::usage(format!("num_features {k} disagrees with the model's {n}")));
    }
    if ds.num_features > n {
        return Err(CliError::usage(format!(
            "dataset uses feature index {} but the model has {n} features",
            ds.num_features
        )));
    }
    let (counts, report) = evaluate(&model.theta, &ds, cfg.sparsity_tau)?;
    let (c, m) = (Confusion::from(counts), Metrics::from(report));
    report_table(&c, &m).write(&cfg.out.join("report.csv"))?;
    Ok((c, m))
}

/// `refmin`: writes `refmin.txt` for the configured training set and
/// regularizer.
pub fn cmd_refmin(cfg: &ExperimentConfig) -> CliResult<RefminFile> {
    let problem = Problem::load(cfg)?;
    let r = reference_minimum(cfg, &problem, cfg.regularizer()?)?;
    write_file(&cfg.out.join("refmin.txt"), &r.render())?;
    Ok(r)
}

/// One benchmark run and its result.
#[derive(Debug)]
pub struct Cell {
    pub reg: RegularizerKind,
    pub method: Method,
    /// Set in λ-sweep mode.
    pub lambda: Option<f64>,
    pub outcome: CliResult<TrainOutcome>,
}

impl Cell {
    pub fn stem(&self) -> String {
        match self.lambda {
            Some(l) => format!("lambda_{l:e}"),
            None => format!("{}_{}", self.reg.name(), self.method.label()),
        }
    }

    pub fn record(&self) -> Option<&RunRecord> {
        self.outcome.as_ref().ok().map(|o| &o.record)
    }
}

#[derive(Debug)]
pub struct BenchmarkReport {
    pub cells: Vec<Cell>,
    pub references: Vec<(RegularizerKind, CliResult<RefminFile>)>,
    pub factorization_seconds: f64,
}

impl BenchmarkReport {
    pub fn cell(&self, reg: RegularizerKind, method: Method) -> Option<&Cell> {
        self.cells.iter().find(|c| c.reg == reg && c.method == method)
    }

    pub fn reference(&self, reg: RegularizerKind) -> Option<&RefminFile> {
        self.references
            .iter()
            .find(|(k, _)| *k == reg)
            .and_then(|(_, r)| r.as_ref().ok())
    }
}

/// Thread pool honoring [`THREADS_ENV`].
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// The configuration of one benchmark cell.
fn cell_config(cfg: &ExperimentConfig, reg: RegularizerKind, method: Method, lambda: Option<f64>) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.reg_kind = reg;
    c.method = method;
    c.refmin = None;
    if reg == RegularizerKind::QuadraticOnly {
        c.lambda = None;
        c.delta = None;
    }
    if lambda.is_some() {
        c.lambda = lambda;
    }
    c
}

/// Runs the benchmark on an already loaded problem without writing anything.
pub fn run_benchmark(cfg: &ExperimentConfig, problem: &Problem) -> CliResult<BenchmarkReport> {
    let sweep = !cfg.lambdas.is_empty();
    let jobs: Vec<(RegularizerKind, Method, Option<f64>)> = if sweep {
        if cfg.reg_kind == RegularizerKind::QuadraticOnly {
            return Err(CliError::usage("a lambda sweep needs a sparsity-promoting regularizer"));
        }
        cfg.lambdas.iter().map(|&l| (cfg.reg_kind, cfg.method, Some(l))).collect()
    } else {
        cfg.regs
            .iter()
            .flat_map(|&r| cfg.methods.iter().map(move |&m| (r, m, None)))
            .collect()
    };
    for &(r, m, l) in &jobs {
        let c = cell_config(cfg, r, m, l);
        c.regularizer()?;
        c.solver_config(m)?;
    }

    let pool = thread_pool()?;
    let started = Instant::now();
    let fact = if jobs.iter().any(|&(_, m, _)| needs_factorization(m)) {
        Some(Arc::new(factorize(&problem.design, cfg.eps_curv)?))
    } else {
        None
    };
    let factorization_seconds = started.elapsed().as_secs_f64();

    let references = if sweep {
        Vec::new()
    } else {
        pool.install(|| {
            cfg.regs
                .par_iter()
                .map(|&r| {
                    let c = cell_config(cfg, r, cfg.method, None);
                    (r, c.regularizer().and_then(|reg| reference_minimum(&c, problem, reg)))
                })
                .collect::<Vec<_>>()
        })
    };
    let reference_for = |r: RegularizerKind| {
        references
            .iter()
            .find(|(k, _)| *k == r)
            .and_then(|(_, x)| x.as_ref().ok())
    };

    let cells = pool.install(|| {
        jobs.par_iter()
            .map(|&(reg, method, lambda)| {
                let c = cell_config(cfg, reg, method, lambda);
                let outcome = train_problem(&c, problem, reference_for(reg), fact.clone());
                if let Err(e) = &outcome {
                    log::warn!("{} with {reg} failed: {e}", method.label());
                }
                Cell { reg, method, lambda, outcome }
            })
            .collect::<Vec<_>>()
    });
    Ok(BenchmarkReport { cells, references, factorization_seconds })
}

type MetricFn = fn(&Metrics) -> Option<f64>;

/// Method columns, one row group per metric and one row per regularizer.
pub fn summary_table(cfg: &ExperimentConfig, report: &BenchmarkReport) -> Table {
    let mut header = vec!["metric".to_string(), "reg".to_string()];
    header.extend(cfg.methods.iter().map(|m| m.label().to_string()));
    let mut t = Table::new(header);
    let groups: [(&str, MetricFn); 4] = [
        ("accuracy", |m| m.accuracy),
        ("recall", |m| m.recall),
        ("precision", |m| m.precision),
        ("f1", |m| m.f1),
    ];
    for (name, get) in groups {
        for &reg in &cfg.regs {
            let mut row = vec![name.to_string(), reg.name().to_string()];
            row.extend(cfg.methods.iter().map(|&m| {
                match report.cell(reg, m).and_then(Cell::record) {
                    Some(r) => metric(get(&r.metrics)),
                    None => FAILED.to_string(),
                }
            }));
            t.push(row);
        }
    }
    t
}

/// Training seconds, one row per regularizer.
pub fn timing_table(cfg: &ExperimentConfig, report: &BenchmarkReport) -> Table {
    let mut header = vec!["reg".to_string()];
    header.extend(cfg.methods.iter().map(|m| m.label().to_string()));
    let mut t = Table::new(header);
    for &reg in &cfg.regs {
        let mut row = vec![reg.name().to_string()];
        row.extend(cfg.methods.iter().map(|&m| {
            match report.cell(reg, m).and_then(Cell::record) {
                Some(r) => num(r.timing.train_seconds),
                None => FAILED.to_string(),
            }
        }));
        t.push(row);
    }
    t
}

/// Sparsity and metrics per λ.
pub fn sparsity_table(report: &BenchmarkReport) -> Table {
    let mut t = Table::new([
        "lambda",
        "sparsity_count",
        "sparsity_total",
        "accuracy",
        "precision",
        "recall",
        "f1",
    ]);
    for c in &report.cells {
        let lambda = num(c.lambda.unwrap_or(f64::NAN));
        let row = match c.record() {
            Some(r) => {
                let m = &r.metrics;
                vec![
                    lambda,
                    m.sparsity_count.to_string(),
                    m.sparsity_total.to_string(),
                    metric(m.accuracy),
                    metric(m.precision),
                    metric(m.recall),
                    metric(m.f1),
                ]
            }
            None => {
                let mut row = vec![lambda];
                row.extend(std::iter::repeat(FAILED.to_string()).take(6));
                row
            }
        };
        t.push(row);
    }
    t
}

/// `Φ⁽ⁿ⁾ − φ*` from epoch 0, raw and floored for log-scale plots.
pub fn gap_table(trace: &Trace, phi_star: f64) -> Table {
    let mut t = Table::new(["epoch", "phi", "gap", "gap_floored"]);
    let rows = std::iter::once((0, trace.phi0)).chain(trace.records.iter().map(|r| (r.epoch, r.phi)));
    for (epoch, phi) in rows {
        let gap = phi - phi_star;
        t.push(vec![epoch.to_string(), num(phi), num(gap), num(gap.max(GAP_FLOOR))]);
    }
    t
}

/// `benchmark`: the method × regularizer matrix, or a λ sweep when
/// `lambdas` is set.
///
/// Matrix outputs are `summary.csv`, `timing.csv`, `gaps/<reg>_<method>.csv`,
/// `refmin/<reg>.txt` and `records/<reg>_<method>.json`. A sweep writes
/// `sparsity.csv` and `records/lambda_<λ>.json`.
pub fn cmd_benchmark(cfg: &ExperimentConfig) -> CliResult<BenchmarkReport> {
    let problem = Problem::load(cfg)?;
    let report = run_benchmark(cfg, &problem)?;
    let out = &cfg.out;
    for c in &report.cells {
        if let Ok(o) = &c.outcome {
            write_json(&out.join("records").join(format!("{}.json", c.stem())), &o.record)?;
        }
    }
    if !cfg.lambdas.is_empty() {
        sparsity_table(&report).write(&out.join("sparsity.csv"))?;
        return Ok(report);
    }
    summary_table(cfg, &report).write(&out.join("summary.csv"))?;
    timing_table(cfg, &report).write(&out.join("timing.csv"))?;
    for (reg, r) in &report.references {
        match r {
            Ok(r) => write_file(&out.join("refmin").join(format!("{}.txt", reg.name())), &r.render())?,
            Err(e) => log::warn!("no reference minimum for {reg}: {e}"),
        }
    }
    for c in &report.cells {
        if let (Ok(o), Some(r)) = (&c.outcome, report.reference(c.reg)) {
            gap_table(&o.trace, r.phi_star).write(&out.join("gaps").join(format!("{}.csv", c.stem())))?;
        }
    }
    Ok(report)
}
