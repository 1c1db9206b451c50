//! Dataset loading: LIBSVM text parsing, seeded train/test splits and the
//! label-folded design matrix `L = Diag(y) [X | 1]`.

mod design;
mod libsvm;
mod split;
pub mod synthetic;

pub use design::DesignMatrix;
pub use libsvm::{parse_libsvm, parse_libsvm_str};
pub use split::{split, SplitSpec};

use crate::error::{Error, Result};

/// Class label, always `-1` or `+1` after parsing.
pub type Label = i8;

/// One labeled sparse feature row. Feature indices are 1-based and strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<(usize, f64)>,
    pub label: Label,
}

impl Sample {
    pub fn new(features: Vec<(usize, f64)>, label: Label) -> Self {
        Self { features, label }
    }

    pub fn max_index(&self) -> usize {
        self.features.last().map_or(0, |&(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// `N`, the number of features excluding the bias.
    pub num_features: usize,
    pub name: String,
}

impl Dataset {
    /// Builds a dataset whose feature count is the largest index present.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Self {
        let num_features = samples.iter().map(Sample::max_index).max().unwrap_or(0);
        Self {
            samples,
            num_features,
            name: name.into(),
        }
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        parse_libsvm(&bytes[..], name)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Widens the feature space, e.g. so that a test file agrees with the
    /// training file on `N`.
    pub fn with_num_features(mut self, n: usize) -> Result<Self> {
        let needed = self.samples.iter().map(Sample::max_index).max().unwrap_or(0);
        if n < needed {
            return Err(Error::InvalidConfig(format!(
                "num_features {n} is smaller than the largest feature index {needed}"
            )));
        }
        self.num_features = n;
        Ok(self)
    }

    pub fn count_labels(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.label > 0).count();
        (pos, self.samples.len() - pos)
    }

    /// Logs a warning when a training set lacks one of the classes.
    pub fn warn_if_single_class(&self) {
        let (pos, neg) = self.count_labels();
        if pos == 0 || neg == 0 {
            log::warn!(
                "dataset {} has {pos} positive and {neg} negative samples",
                self.name
            );
        }
    }

    /// Serializes to LIBSVM text. Parsing the output yields an equal dataset.
    pub fn to_libsvm(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(if s.label > 0 { "+1" } else { "-1" });
            for &(i, v) in &s.features {
                let _ = write!(out, " {i}:{v}");
            }
            out.push('\n');
        }
        out
    }
}
