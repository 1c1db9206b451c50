use std::io::BufRead;

use super::{Dataset, Label, Sample};
use crate::error::{Error, Result};

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, one sample per line).
///
/// Blank lines and lines starting with `#` are skipped. Raw labels may use
/// `{-1, +1}`, `{0, 1}` or `{1, 2}`; the last two map `0` and `2` to `-1`.
pub fn parse_libsvm(reader: impl BufRead, name: impl Into<String>) -> Result<Dataset> {
    let mut rows: Vec<(usize, f64, Vec<(usize, f64)>)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (label, features) = parse_line(trimmed).map_err(|message| Error::Parse {
            line: lineno,
            message,
        })?;
        rows.push((lineno, label, features));
    }
    if rows.is_empty() {
        return Err(Error::Empty("no samples in LIBSVM input"));
    }

    let map = label_scheme(&rows)?;
    let samples = rows
        .into_iter()
        .map(|(_, raw, features)| Sample::new(features, map(raw)))
        .collect();
    Ok(Dataset::new(name, samples))
}

pub fn parse_libsvm_str(text: &str, name: impl Into<String>) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), name)
}

fn parse_line(line: &str) -> std::result::Result<(f64, Vec<(usize, f64)>), String> {
    let mut tokens = line.split_whitespace();
    let label_tok = tokens.next().ok_or("missing label")?;
    let label: f64 = label_tok
        .parse()
        .map_err(|_| format!("invalid label {label_tok:?}"))?;
    if !label.is_finite() || label.fract() != 0.0 {
        return Err(format!("invalid label {label_tok:?}"));
    }

    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("expected <index>:<value>, found {tok:?}"))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| format!("invalid feature index {idx:?}"))?;
        if idx < 1 {
            return Err("feature indices start at 1".into());
        }
        if idx <= last {
            return Err(format!("feature index {idx} does not increase (previous {last})"));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("invalid feature value {val:?}"))?;
        if !val.is_finite() {
            return Err(format!("non-finite feature value {val}"));
        }
        features.push((idx, val));
        last = idx;
    }
    Ok((label, features))
}

fn label_scheme(rows: &[(usize, f64, Vec<(usize, f64)>)]) -> Result<fn(f64) -> Label> {
    let all_in = |set: &[f64]| rows.iter().all(|(_, l, _)| set.contains(l));
    if all_in(&[-1.0, 1.0]) {
        return Ok(|l| if l > 0.0 { 1 } else { -1 });
    }
    if all_in(&[0.0, 1.0]) {
        return Ok(|l| if l == 1.0 { 1 } else { -1 });
    }
    if all_in(&[1.0, 2.0]) {
        return Ok(|l| if l == 1.0 { 1 } else { -1 });
    }
    let (line, label, _) = rows
        .iter()
        .find(|(_, l, _)| ![-1.0, 1.0].contains(l))
        .expect("some label falls outside {-1, +1}");
    Err(Error::Parse {
        line: *line,
        message: format!("label {label} does not fit the {{-1,+1}}, {{0,1}} or {{1,2}} conventions"),
    })
}
