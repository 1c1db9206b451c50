#![allow(dead_code)]

use mmsvm::linalg::DenseMatrix;
use mmsvm::rng::SplitMix64;
use mmsvm::{Context, Design, Matrix, Params, Reg};

pub fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.unit_f64()
}

pub fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    DenseMatrix::from_fn(rows, cols, |_, _| uniform(rng, -1.0, 1.0))
}

/// `Diag(y) [X | 1]` with dense uniform features and random labels.
pub fn random_design(rng: &mut SplitMix64, samples: usize, features: usize) -> Design {
    let mut m = DenseMatrix::zeros(samples, features + 1);
    for k in 0..samples {
        let y = if rng.below(2) == 0 { -1.0 } else { 1.0 };
        let row = m.row_mut(k);
        for v in row.iter_mut().take(features) {
            *v = y * uniform(rng, -1.0, 1.0);
        }
        row[features] = y;
    }
    Design::from_matrix(m)
}

pub fn random_theta(rng: &mut SplitMix64, dim: usize, scale: f64) -> Params {
    Params::from((0..dim).map(|_| uniform(rng, -scale, scale)).collect::<Vec<_>>())
}

/// One regularizer of each family with moderate random parameters.
pub fn random_regs(rng: &mut SplitMix64) -> [Reg; 3] {
    [
        Reg::quadratic_only(uniform(rng, 0.0, 0.5)),
        Reg::hyperbolic(uniform(rng, 0.01, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.0, 0.1)),
        Reg::welsh(uniform(rng, 0.01, 1.0), uniform(rng, 0.3, 1.5), uniform(rng, 0.0, 0.1)),
    ]
}

pub fn context(design: &Design, reg: Reg) -> Context {
    Context::new(design.clone(), reg).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central differences of `f` with step `1e-6 (1 + |θᵢ|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64]) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + theta[i].abs());
            x[i] = theta[i] + h;
            let up = f(&x);
            x[i] = theta[i] - h;
            let down = f(&x);
            x[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
