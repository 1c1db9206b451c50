//! Experiment configuration: a flat `key = value` file overlaid by flags.
//!
//! Every key has a default, so an empty file plus `--data` is a complete
//! training run. Keys may be spelled with `-` or `_`.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::PathBuf;
use std::str::FromStr;

use mmsvm::solvers::{Method, SolverConfig};
use mmsvm::{Config, Reg, RegularizerKind};

use crate::error::{CliError, CliResult};

/// `η` used when only the quadratic term is active.
pub const L2_ETA: f64 = 1e-4;
/// `λ` and `δ` for the sparsity-promoting potentials.
pub const SPARSE_LAMBDA: f64 = 1e-4;
pub const SPARSE_DELTA: f64 = 1e-4;

pub const DEFAULT_METHOD: Method = Method::HybridMm;
pub const DEFAULT_REG: RegularizerKind = RegularizerKind::Hyperbolic;

/// Benchmark columns in table order.
pub const TABLE_METHODS: [Method; 7] = [
    Method::Fg,
    Method::Mmi,
    Method::HybridMmi,
    Method::Mm,
    Method::HybridMm,
    Method::Sub,
    Method::HybridSub,
];

/// Benchmark row groups in table order.
pub const TABLE_REGS: [RegularizerKind; 3] = [
    RegularizerKind::Hyperbolic,
    RegularizerKind::Welsh,
    RegularizerKind::QuadraticOnly,
];

const KEYS: [&str; 23] = [
    "data",
    "test_data",
    "split",
    "seed",
    "num_features",
    "method",
    "reg",
    "lambda",
    "delta",
    "eta",
    "alpha",
    "epochs",
    "iota",
    "batch",
    "eps_curv",
    "sparsity_tau",
    "refmin",
    "out",
    "model",
    "methods",
    "regs",
    "lambdas",
    "config",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Evaluate,
    Benchmark,
    Refmin,
}

/// Where the reference minimum for gap columns comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RefminSource {
    Compute,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    /// Training share when no separate test file is given.
    pub split: f64,
    /// Seeds both the split and the stochastic solvers.
    pub seed: u64,
    pub num_features: Option<usize>,
    pub method: Method,
    pub reg_kind: RegularizerKind,
    /// Explicit values; `None` falls back to the per-family protocol.
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    /// `None` means the method default (`1.9/μ` for FG).
    pub alpha: Option<f64>,
    pub epochs: usize,
    pub iota: usize,
    pub batch: usize,
    pub eps_curv: f64,
    pub sparsity_tau: f64,
    pub refmin: Option<RefminSource>,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub regs: Vec<RegularizerKind>,
    pub lambdas: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            test_data: None,
            split: 0.8,
            seed: 0,
            num_features: None,
            method: DEFAULT_METHOD,
            reg_kind: DEFAULT_REG,
            lambda: None,
            delta: None,
            eta: None,
            alpha: None,
            epochs: SolverConfig::<f64>::DEFAULT_EPOCHS,
            iota: SolverConfig::<f64>::DEFAULT_IOTA,
            batch: 1,
            eps_curv: 1e-4,
            sparsity_tau: mmsvm::metrics::DEFAULT_SPARSITY_TAU,
            refmin: None,
            out: PathBuf::from("out"),
            model: None,
            methods: TABLE_METHODS.to_vec(),
            regs: TABLE_REGS.to_vec(),
            lambdas: Vec::new(),
        }
    }
}

/// Raw `key → value` pairs with normalized keys.
pub type Pairs = BTreeMap<String, String>;

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_pairs(text: &str) -> CliResult<Pairs> {
    let mut out = Pairs::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = normalize_key(k);
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(CliError::usage(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::usage(format!("invalid value {v:?} for {key}")))
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = parse(key, v)?;
    if !x.is_finite() {
        return Err(CliError::usage(format!("{key} must be finite, got {v}")));
    }
    Ok(x)
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::usage(format!("{key} needs at least one entry")));
    }
    Ok(items)
}

impl ExperimentConfig {
    /// Builds a config from file pairs overlaid by flag pairs.
    pub fn resolve(file: Pairs, flags: Pairs) -> CliResult<Self> {
        let mut pairs = file;
        pairs.extend(flags);
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &Pairs) -> CliResult<Self> {
        let mut c = Self::default();
        for (key, v) in pairs {
            let v = v.as_str();
            match key.as_str() {
                "data" => c.data = Some(PathBuf::from(v)),
                "test_data" => c.test_data = Some(PathBuf::from(v)),
                "split" => c.split = parse_f64(key, v)?,
                "seed" => c.seed = parse(key, v)?,
                "num_features" => c.num_features = Some(parse(key, v)?),
                "method" => c.method = v.parse()?,
                "reg" => c.reg_kind = v.parse()?,
                "lambda" => c.lambda = Some(parse_f64(key, v)?),
                "delta" => c.delta = Some(parse_f64(key, v)?),
                "eta" => c.eta = Some(parse_f64(key, v)?),
                "alpha" if v.eq_ignore_ascii_case("auto") => c.alpha = None,
                "alpha" => c.alpha = Some(parse_f64(key, v)?),
                "epochs" => c.epochs = parse(key, v)?,
                "iota" => c.iota = parse(key, v)?,
                "batch" => c.batch = parse(key, v)?,
                "eps_curv" => c.eps_curv = parse_f64(key, v)?,
                "sparsity_tau" => c.sparsity_tau = parse_f64(key, v)?,
                "refmin" if v.eq_ignore_ascii_case("compute") => c.refmin = Some(RefminSource::Compute),
                "refmin" => c.refmin = Some(RefminSource::File(PathBuf::from(v))),
                "out" => c.out = PathBuf::from(v),
                "model" => c.model = Some(PathBuf::from(v)),
                "methods" => c.methods = parse_list(key, v, |s| Ok(s.parse()?))?,
                "regs" => c.regs = parse_list(key, v, |s| Ok(s.parse()?))?,
                "lambdas" => c.lambdas = parse_list(key, v, |s| parse_f64(key, s))?,
                other => return Err(CliError::usage(format!("unknown key {other:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> CliResult<()> {
        if self.reg_kind == RegularizerKind::QuadraticOnly
            && (self.lambda.is_some() || self.delta.is_some())
        {
            return Err(CliError::usage(
                "lambda and delta do not apply to the l2 regularizer",
            ));
        }
        if !(self.split > 0.0 && self.split <= 1.0) {
            return Err(CliError::usage(format!("split must lie in (0, 1], got {}", self.split)));
        }
        if !(self.sparsity_tau >= 0.0) {
            return Err(CliError::usage("sparsity_tau must be >= 0"));
        }
        if self.lambdas.iter().any(|&l| l < 0.0) {
            return Err(CliError::usage("lambdas must be >= 0"));
        }
        self.regularizer()?;
        self.solver_config(self.method)?;
        Ok(())
    }

    /// Regularizer of family `kind` with the explicit values where they
    /// apply and the protocol defaults elsewhere.
    pub fn regularizer_for(&self, kind: RegularizerKind) -> Reg {
        match kind {
            RegularizerKind::QuadraticOnly => Reg::quadratic_only(self.eta.unwrap_or(L2_ETA)),
            RegularizerKind::Hyperbolic | RegularizerKind::Welsh => Reg {
                kind,
                lambda: self.lambda.unwrap_or(SPARSE_LAMBDA),
                delta: self.delta.unwrap_or(SPARSE_DELTA),
                eta: self.eta.unwrap_or(0.0),
            },
        }
    }

    pub fn regularizer(&self) -> CliResult<Reg> {
        let r = self.regularizer_for(self.reg_kind);
        r.validate()?;
        Ok(r)
    }

    pub fn solver_config(&self, method: Method) -> CliResult<Config> {
        let mut cfg = Config::new(method);
        cfg.max_epochs = self.epochs;
        cfg.warmup_iota = self.iota;
        cfg.batch_size = self.batch;
        cfg.seed = self.seed;
        cfg.epsilon_curv = self.eps_curv;
        if let Some(a) = self.alpha {
            cfg.alpha = a;
            cfg.fg_alpha_auto = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved configuration as `key → value`, defaults included. Keys
    /// that do not apply to `command` are left out.
    pub fn echo(&self, command: Command) -> Pairs {
        let mut p = Pairs::new();
        let mut put = |k: &str, v: String| {
            p.insert(k.to_string(), v);
        };
        let path = |x: &PathBuf| x.display().to_string();
        if command == Command::Evaluate {
            if let Some(m) = &self.model {
                put("model", path(m));
            }
            if let Some(d) = &self.data {
                put("data", path(d));
            }
            if let Some(n) = self.num_features {
                put("num_features", n.to_string());
            }
            put("sparsity_tau", self.sparsity_tau.to_string());
            put("out", path(&self.out));
            return p;
        }

        if let Some(d) = &self.data {
            put("data", path(d));
        }
        match &self.test_data {
            Some(t) => put("test_data", path(t)),
            None => put("split", self.split.to_string()),
        }
        put("seed", self.seed.to_string());
        if let Some(n) = self.num_features {
            put("num_features", n.to_string());
        }
        put("eps_curv", self.eps_curv.to_string());
        put("out", path(&self.out));

        let reg = self.regularizer_for(self.reg_kind);
        let single_reg = command != Command::Benchmark || !self.lambdas.is_empty();
        if single_reg {
            put("reg", self.reg_kind.to_string());
            if reg.kind != RegularizerKind::QuadraticOnly {
                put("lambda", reg.lambda.to_string());
                put("delta", reg.delta.to_string());
            }
            put("eta", reg.eta.to_string());
        } else {
            put("regs", join(&self.regs));
            for (k, v) in [("lambda", self.lambda), ("delta", self.delta), ("eta", self.eta)] {
                if let Some(v) = v {
                    put(k, v.to_string());
                }
            }
        }
        if command == Command::Refmin {
            return p;
        }

        put("sparsity_tau", self.sparsity_tau.to_string());
        put("epochs", self.epochs.to_string());
        put("iota", self.iota.to_string());
        put("batch", self.batch.to_string());
        put(
            "alpha",
            self.alpha.map_or_else(|| "auto".to_string(), |a| a.to_string()),
        );
        if command == Command::Benchmark && self.lambdas.is_empty() {
            put("methods", join(&self.methods));
        } else {
            put("method", self.method.to_string());
        }
        if command == Command::Benchmark && !self.lambdas.is_empty() {
            put("lambdas", join(&self.lambdas));
        }
        if let Some(r) = &self.refmin {
            put(
                "refmin",
                match r {
                    RefminSource::Compute => "compute".to_string(),
                    RefminSource::File(f) => path(f),
                },
            );
        }
        p
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Renders pairs in the file syntax accepted by [`parse_pairs`].
pub fn render_pairs(pairs: &Pairs) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
