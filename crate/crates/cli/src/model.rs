//! Plain-text model files: a `key = value` header followed by one weight per
//! line, bias last.

use std::fmt::Write;
use std::path::Path;

use mmsvm::{Params, Reg, RegularizerKind};

use crate::error::{CliError, CliResult};

const MAGIC: &str = "# mmsvm linear model";
const BODY: &str = "weights";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub theta: Params,
    pub reg: Reg,
    pub method: String,
}

impl ModelFile {
    pub fn num_features(&self) -> usize {
        self.theta.num_features()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "num_features = {}", self.num_features());
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "reg = {}", self.reg.kind);
        if self.reg.kind != RegularizerKind::QuadraticOnly {
            let _ = writeln!(s, "lambda = {}", self.reg.lambda);
            let _ = writeln!(s, "delta = {}", self.reg.delta);
        }
        let _ = writeln!(s, "eta = {}", self.reg.eta);
        let _ = writeln!(s, "{BODY}");
        for v in self.theta.iter() {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let bad = |m: String| CliError::Io(format!("model file: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing header line".into()));
        }
        let mut num_features = None;
        let mut method = String::new();
        let mut kind = None;
        let (mut lambda, mut delta, mut eta) = (0.0, 0.0, 0.0);
        for line in lines.by_ref() {
            if line == BODY {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, found {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("invalid {k} {v:?}")));
            match k {
                "num_features" => {
                    num_features = Some(v.parse::<usize>().map_err(|_| bad(format!("invalid {k} {v:?}")))?)
                }
                "method" => method = v.to_string(),
                "reg" => kind = Some(v.parse::<RegularizerKind>().map_err(|e| bad(e.to_string()))?),
                "lambda" => lambda = num(v)?,
                "delta" => delta = num(v)?,
                "eta" => eta = num(v)?,
                _ => return Err(bad(format!("unknown header key {k:?}"))),
            }
        }
        let n = num_features.ok_or_else(|| bad("num_features missing".into()))?;
        let kind = kind.ok_or_else(|| bad("reg missing".into()))?;
        let values: Vec<f64> = lines
            .map(|l| match l.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(bad(format!("invalid weight {l:?}"))),
            })
            .collect::<CliResult<_>>()?;
        if values.len() != n + 1 {
            return Err(bad(format!("expected {} values, found {}", n + 1, values.len())));
        }
        Ok(Self {
            theta: Params::from(values),
            reg: Reg { kind, lambda, delta, eta },
            method,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
