//! Metric MDS by SMACOF stress majorization, seeded from classical
//! (Torgerson) scaling.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::pca::{descending_order, orient, to_matrix};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsProjection {
    pub coords: Vec<[f64; 2]>,
    /// Raw stress: sum over pairs of squared distance residuals.
    pub stress: f64,
    /// Stress of the initial layout followed by one entry per iteration.
    pub stress_history: Vec<f64>,
}

pub fn euclidean_distances(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let x = to_matrix(rows)?;
    let n = x.nrows();
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (x.row(i) - x.row(j)).norm();
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    Ok(dist)
}

/// Classical scaling: top two eigenvectors of the double-centered squared
/// distance matrix, scaled by the root of their eigenvalues.
pub fn classical_mds2(dist: &DMatrix<f64>) -> Vec<[f64; 2]> {
    let n = dist.nrows();
    let sq = dist.map(|d| d * d);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let order = descending_order(eig.eigenvalues.as_slice());
    let mut coords = vec![[0.0; 2]; n];
    for (slot, &k) in order.iter().take(2).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        let mut column: Vec<f64> = eig.eigenvectors.column(k).iter().map(|v| v * scale).collect();
        orient(&mut column);
        for (c, v) in coords.iter_mut().zip(column) {
            c[slot] = v;
        }
    }
    coords
}

pub fn raw_stress(dist: &DMatrix<f64>, coords: &[[f64; 2]]) -> f64 {
    let n = coords.len();
    let mut stress = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = planar_distance(coords[i], coords[j]);
            let r = dist[(i, j)] - d;
            stress += r * r;
        }
    }
    stress
}

fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// One Guttman transform: `X' = B(X) X / n` with unit weights.
fn guttman(dist: &DMatrix<f64>, coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = coords.len();
    let mut next = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut acc = [0.0; 2];
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = planar_distance(coords[i], coords[j]);
            let b = if d > 0.0 { -dist[(i, j)] / d } else { 0.0 };
            diag -= b;
            acc[0] += b * coords[j][0];
            acc[1] += b * coords[j][1];
        }
        next[i] = [(acc[0] + diag * coords[i][0]) / n as f64, (acc[1] + diag * coords[i][1]) / n as f64];
    }
    next
}

/// Runs SMACOF from `init` until `max_iterations` or a relative stress
/// decrease below `tolerance`.
pub fn smacof(dist: &DMatrix<f64>, init: Vec<[f64; 2]>, max_iterations: usize, tolerance: f64) -> MdsProjection {
    let mut coords = init;
    let mut stress = raw_stress(dist, &coords);
    let mut history = vec![stress];
    for _ in 0..max_iterations {
        if stress == 0.0 {
            break;
        }
        let next = guttman(dist, &coords);
        let next_stress = raw_stress(dist, &next);
        history.push(next_stress);
        let improvement = stress - next_stress;
        coords = next;
        let previous = stress;
        stress = next_stress;
        if improvement < tolerance * previous {
            break;
        }
    }
    MdsProjection { coords, stress, stress_history: history }
}

pub fn mds2(rows: &[Vec<f64>]) -> Result<MdsProjection> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::DegenerateData(format!("MDS needs at least 3 points, got {n}")));
    }
    let dist = euclidean_distances(rows)?;
    if dist.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateData("all points coincide".into()));
    }
    let init = classical_mds2(&dist);
    Ok(smacof(&dist, init, MAX_ITERATIONS, RELATIVE_TOLERANCE))
}
