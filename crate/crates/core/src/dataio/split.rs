use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Shuffles with the seeded generator, then cuts at `⌊train_fraction · K⌋`.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset"));
    }
    let f = spec.train_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidSplit(format!(
            "train fraction {f} is outside (0, 1]"
        )));
    }
    let k = ds.len();
    let cut = (f * k as f64).floor() as usize;
    if cut == 0 {
        return Err(Error::InvalidSplit(format!(
            "train fraction {f} of {k} samples leaves no training data"
        )));
    }
    let mut order: Vec<usize> = (0..k).collect();
    SplitMix64::new(spec.seed).shuffle(&mut order);

    let pick = |idx: &[usize], suffix: &str| Dataset {
        samples: idx.iter().map(|&i| ds.samples[i].clone()).collect(),
        num_features: ds.num_features,
        name: format!("{}{suffix}", ds.name),
    };
    Ok((pick(&order[..cut], ".train"), pick(&order[cut..], ".test")))
}
