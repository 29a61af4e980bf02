//! Exact O(n²) t-SNE.
//!
//! Per-point Gaussian bandwidths are found by bisection on the perplexity,
//! the joint distribution is symmetrized, and the layout is optimized by
//! gradient descent with momentum and per-coordinate gains. Initialization
//! is the PCA layout rescaled to a standard deviation of 1e-4, plus a tiny
//! seeded jitter.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::pca::pca2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TsneOptions {
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl TsneOptions {
    pub fn new(perplexity: f64, seed: u64, iterations: usize) -> Self {
        TsneOptions {
            perplexity,
            seed,
            iterations,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

/// Perplexity tolerance of the bandwidth search.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 200;
const INIT_STD: f64 = 1e-4;
const INIT_JITTER: f64 = 1e-6;
const MIN_GAIN: f64 = 0.01;

pub fn squared_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// Row `i` of the conditional distribution P(j | i) for precision `beta`,
/// together with its perplexity.
fn conditional_row(sq: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let n = row.len();
    let min = (0..n).filter(|&j| j != i).map(|j| sq[j]).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for j in 0..n {
        row[j] = if j == i { 0.0 } else { (-(sq[j] - min) * beta).exp() };
        sum += row[j];
    }
    let mut weighted = 0.0;
    for j in 0..n {
        row[j] /= sum;
        weighted += row[j] * (sq[j] - min);
    }
    // Entropy in nats; the shift by `min` cancels out.
    let entropy = sum.ln() + beta * weighted;
    entropy.exp()
}

/// Conditional probabilities P(j | i) as a row-major n×n matrix, each row
/// calibrated to `perplexity`.
pub fn conditional_probabilities(sq: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let dists = &sq[i * n..(i + 1) * n];
        let row = &mut p[i * n..(i + 1) * n];
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        let mut beta = 1.0;
        for _ in 0..MAX_BISECTION_STEPS {
            let perp = conditional_row(dists, i, beta, row);
            if (perp - perplexity).abs() < PERPLEXITY_TOLERANCE {
                break;
            }
            if perp > perplexity {
                // Too flat: sharpen.
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
    }
    p
}

/// Embeds `rows` in two dimensions. `cancel` is polled once per iteration.
pub fn tsne2(rows: &[Vec<f64>], options: &TsneOptions, cancel: Option<&AtomicBool>) -> Result<Vec<[f64; 2]>> {
    let n = rows.len();
    if n < 5 {
        return Err(Error::DegenerateData(format!("t-SNE needs at least 5 points, got {n}")));
    }
    let max = (n - 1) as f64 / 3.0;
    if options.perplexity > max {
        return Err(Error::PerplexityTooLarge { perplexity: options.perplexity, n, max });
    }

    let sq = squared_distances(rows);
    let cond = conditional_probabilities(&sq, n, options.perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
        p[i * n + i] = 0.0;
    }

    let mut y = initial_layout(rows, options.seed)?;
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0; 2]; n];

    for iter in 0..options.iterations {
        if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(Error::Cancelled);
        }
        let exaggeration = if iter < options.exaggeration_iterations { options.early_exaggeration } else { 1.0 };
        let momentum = if iter < options.exaggeration_iterations { options.initial_momentum } else { options.final_momentum };

        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                z += 2.0 * q;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = num[i * n + j];
                let mult = (exaggeration * p[i * n + j] - q / z) * q;
                g[0] += mult * (y[i][0] - y[j][0]);
                g[1] += mult * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for c in 0..2 {
                let same_sign = (grad[i][c] > 0.0) == (update[i][c] > 0.0);
                gains[i][c] = if same_sign { (gains[i][c] * 0.8).max(MIN_GAIN) } else { gains[i][c] + 0.2 };
                update[i][c] = momentum * update[i][c] - options.learning_rate * gains[i][c] * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        let mean = [y.iter().map(|p| p[0]).sum::<f64>() / n as f64, y.iter().map(|p| p[1]).sum::<f64>() / n as f64];
        for p in y.iter_mut() {
            p[0] -= mean[0];
            p[1] -= mean[1];
        }
    }
    Ok(y)
}

fn initial_layout(rows: &[Vec<f64>], seed: u64) -> Result<Vec<[f64; 2]>> {
    let pca = pca2(rows)?;
    let n = pca.coords.len() as f64;
    let mean = pca.coords.iter().map(|c| c[0]).sum::<f64>() / n;
    let std = (pca.coords.iter().map(|c| (c[0] - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { INIT_STD / std } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, INIT_JITTER).expect("valid normal");
    Ok(pca
        .coords
        .iter()
        .map(|c| [c[0] * scale + jitter.sample(&mut rng), c[1] * scale + jitter.sample(&mut rng)])
        .collect())
}
