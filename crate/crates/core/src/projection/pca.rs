use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaProjection {
    pub coords: Vec<[f64; 2]>,
    /// Variance along each principal axis (sample covariance eigenvalues).
    pub explained_variance: [f64; 2],
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::DegenerateData("rows are empty".into()));
    }
    let mut m = DMatrix::zeros(n, d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::LengthMismatch { expected: d, found: row.len() });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateData(format!("row {i} has non-finite values")));
        }
        for (j, &x) in row.iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

/// Indices of eigenvalues in descending order; ties keep the lower index.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Flips `axis` so that its largest-magnitude component is positive.
/// Returns whether it flipped.
pub(crate) fn orient(axis: &mut [f64]) -> bool {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis.get(best).is_some_and(|&v| v < 0.0) {
        axis.iter_mut().for_each(|v| *v = -*v);
        true
    } else {
        false
    }
}

/// Projects mean-centered rows onto their top two principal axes.
///
/// Works on whichever of the covariance (d×d) or Gram (n×n) matrix is
/// smaller. Each principal axis is oriented so its largest-magnitude
/// loading is positive.
pub fn pca2(rows: &[Vec<f64>]) -> Result<PcaProjection> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::DegenerateData(format!("PCA needs at least 3 points, got {n}")));
    }
    let mut x = to_matrix(rows)?;
    let d = x.ncols();
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData("all points coincide (rank 0)".into()));
    }
    let denom = (n - 1) as f64;

    let mut axes: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut variance = [0.0; 2];
    if d <= n {
        let cov = x.tr_mul(&x) / denom;
        let eig = SymmetricEigen::new(cov);
        let order = descending_order(eig.eigenvalues.as_slice());
        for (slot, &k) in order.iter().take(2).enumerate() {
            variance[slot] = eig.eigenvalues[k].max(0.0);
            axes[slot] = eig.eigenvectors.column(k).iter().copied().collect();
        }
    } else {
        let gram = &x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending_order(eig.eigenvalues.as_slice());
        for (slot, &k) in order.iter().take(2).enumerate() {
            let lambda = eig.eigenvalues[k].max(0.0);
            variance[slot] = lambda / denom;
            if lambda > 0.0 {
                let u = eig.eigenvectors.column(k);
                let v = x.tr_mul(&u) / lambda.sqrt();
                axes[slot] = v.iter().copied().collect();
            }
        }
    }
    if d == 1 {
        variance[1] = 0.0;
    }

    for axis in axes.iter_mut() {
        orient(axis);
    }
    let coords = (0..n)
        .map(|i| {
            let row = x.row(i);
            let proj = |axis: &[f64]| row.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>();
            [proj(&axes[0]), proj(&axes[1])]
        })
        .collect();
    Ok(PcaProjection { coords, explained_variance: variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_has_no_second_component() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = i as f64 * 0.7 - 2.0;
                vec![t, 2.0 * t, -t, 0.5 * t, 3.0]
            })
            .collect();
        let p = pca2(&rows).unwrap();
        assert!(p.explained_variance[0] > 1.0);
        assert!(p.explained_variance[1].abs() < 1e-9);
        assert!(p.coords.iter().all(|c| c[1].abs() < 1e-6));
    }

    #[test]
    fn identical_points_are_degenerate() {
        let rows = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(pca2(&rows), Err(Error::DegenerateData(_))));
        assert!(matches!(pca2(&rows[..2]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn gram_and_covariance_routes_agree() {
        // d > n takes the Gram route; padding with zero columns keeps the
        // geometry while pushing d past n.
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let f = i as f64;
                vec![f.sin(), (2.0 * f).cos(), f * 0.3, (f * 1.7).sin()]
            })
            .collect();
        let wide: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().copied().chain(std::iter::repeat_n(0.0, 10)).collect()).collect();
        let a = pca2(&rows).unwrap();
        let b = pca2(&wide).unwrap();
        for (p, q) in a.coords.iter().zip(&b.coords) {
            assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9, "{p:?} vs {q:?}");
        }
        assert!((a.explained_variance[0] - b.explained_variance[0]).abs() < 1e-9);
    }
}
