//! Seeded generator for binary-feature datasets shaped like the a1a benchmark
//! (one-hot encoded census attributes, roughly a quarter positives).

use super::{Dataset, Sample};
use crate::rng::SplitMix64;

/// One-hot block sizes; they sum to 119 features.
pub const ADULT_LIKE_GROUPS: [usize; 14] = [5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 37];

/// Blocks that are occasionally left empty, as missing values are in the
/// census source.
const SOMETIMES_MISSING: [usize; 3] = [1, 6, 13];

/// Target share of positive labels.
const POSITIVE_RATE: f64 = 0.246;

fn gaussian(rng: &mut SplitMix64) -> f64 {
    let u1 = 1.0 - rng.unit_f64();
    let u2 = rng.unit_f64();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Draws `samples` rows with binary one-hot features and labels from a
/// planted sparse logistic model.
pub fn adult_like(samples: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);

    let mut offsets = Vec::with_capacity(ADULT_LIKE_GROUPS.len());
    let mut cumulative = Vec::with_capacity(ADULT_LIKE_GROUPS.len());
    let mut start = 0;
    for &size in &ADULT_LIKE_GROUPS {
        offsets.push(start);
        start += size;
        let mut w: Vec<f64> = (0..size).map(|c| 1.0 / ((c + 1) as f64).powf(1.1)).collect();
        rng.shuffle(&mut w);
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        cumulative.push(
            w.iter()
                .map(|p| {
                    acc += p / total;
                    acc
                })
                .collect::<Vec<_>>(),
        );
    }
    let n = start;

    let effect: Vec<f64> = (0..n)
        .map(|_| {
            if rng.unit_f64() < 0.45 {
                0.0
            } else {
                1.2 * gaussian(&mut rng)
            }
        })
        .collect();

    let rows: Vec<Vec<usize>> = (0..samples)
        .map(|_| {
            let mut active = Vec::with_capacity(ADULT_LIKE_GROUPS.len());
            for (g, cum) in cumulative.iter().enumerate() {
                if SOMETIMES_MISSING.contains(&g) && rng.unit_f64() < 0.05 {
                    continue;
                }
                let u = rng.unit_f64();
                let c = cum.iter().position(|&p| u < p).unwrap_or(cum.len() - 1);
                active.push(offsets[g] + c);
            }
            active
        })
        .collect();

    let scores: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|&i| effect[i]).sum())
        .collect();
    let mean_rate = |b: f64| scores.iter().map(|s| sigmoid(s + b)).sum::<f64>() / scores.len().max(1) as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < POSITIVE_RATE {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bias = 0.5 * (lo + hi);

    let samples = rows
        .into_iter()
        .zip(&scores)
        .map(|(active, &s)| {
            let label = if rng.unit_f64() < sigmoid(s + bias) { 1 } else { -1 };
            Sample::new(active.into_iter().map(|i| (i + 1, 1.0)).collect(), label)
        })
        .collect();

    let mut ds = Dataset::new(format!("adult-like-{seed}"), samples);
    ds.num_features = n;
    ds
}
