//! Minimal comma-separated tables. Cells never contain commas or quotes, so
//! no escaping is needed.

use std::fmt::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Cell text for a metric with a zero denominator.
pub const UNDEFINED: &str = "undefined";
/// Cell text for a benchmark run that errored.
pub const FAILED: &str = "failed";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Io("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(CliError::Io(format!(
                    "CSV row {} has {} cells, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, &self.render())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text)
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

/// Shortest text that parses back to the same value.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn metric(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEFINED.to_string(), num)
}
