//! Independent reference implementations used by the integration tests.
//! None of these call into the library's numeric code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| normal(rng)).collect()).collect()
}

/// Gaussian blobs: `sizes[i]` points around a random center scaled by
/// `spread`, centers drawn with standard deviation `scale`.
pub fn blobs(rng: &mut ChaCha8Rng, d: usize, sizes: &[usize], scale: f64, spread: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (label, &size) in sizes.iter().enumerate() {
        let center: Vec<f64> = (0..d).map(|_| scale * normal(rng)).collect();
        for _ in 0..size {
            rows.push(center.iter().map(|c| c + spread * normal(rng)).collect());
            labels.push(label);
        }
    }
    (rows, labels)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (a[i][i], (0..n).map(|k| v[k][i]).collect())).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    pairs
}

/// Top-two principal coordinates via the covariance matrix, with no sign
/// convention applied.
pub fn pca_oracle(rows: &[Vec<f64>]) -> (Vec<[f64; 2]>, [f64; 2]) {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| centered.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1) as f64).collect())
        .collect();
    let eig = jacobi_eigen(cov);
    let coords = centered
        .iter()
        .map(|r| {
            let p = |k: usize| r.iter().zip(&eig[k].1).map(|(x, w)| x * w).sum::<f64>();
            [p(0), p(1)]
        })
        .collect();
    (coords, [eig[0].0, eig[1].0])
}

pub fn pairwise(points: &[[f64; 2]]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt());
        }
    }
    out
}

pub fn pairwise_nd(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            out.push(rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        }
    }
    out
}

/// All-pairs k nearest neighbors, ties by word then index.
pub fn brute_knn(words: &[String], points: &[[f64; 2]], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut others: Vec<(f64, &str, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let d = (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
                    (d, words[j].as_str(), j)
                })
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
            others.into_iter().take(k).map(|(_, _, j)| j).collect()
        })
        .collect()
}

/// Gaussian KDE value at `c` by direct summation.
pub fn kde_direct(points: &[[f64; 2]], c: [f64; 2], h: f64) -> f64 {
    points.iter().map(|p| (-((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)) / (2.0 * h * h)).exp()).sum()
}

/// Per-point nearest-centroid check with plain Euclidean distances.
pub fn dsc_brute(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    let centroid = |c: usize| {
        let members: Vec<&[f64; 2]> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
        let n = members.len() as f64;
        [members.iter().map(|p| p[0]).sum::<f64>() / n, members.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let centroids: BTreeMap<usize, [f64; 2]> = classes.iter().map(|&c| (c, centroid(c))).collect();
    let mut good = 0;
    for (p, l) in points.iter().zip(labels) {
        let dist = |c: &[f64; 2]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        let own = dist(&centroids[l]);
        if centroids.iter().all(|(m, c)| m == l || dist(c) > own) {
            good += 1;
        }
    }
    good as f64 / points.len() as f64
}

/// Sector as the direction among the eight compass directions with the
/// largest dot product.
pub fn sector_oracle(dx: f64, dy: f64) -> usize {
    (0..8)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 4.0;
            (k, dx * a.cos() + dy * a.sin())
        })
        .fold((0, f64::NEG_INFINITY), |best, (k, s)| if s > best.1 { (k, s) } else { best })
        .0
}

/// Neumaier-compensated componentwise mean.
pub fn compensated_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    (0..d)
        .map(|j| {
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for r in rows {
                let x = r[j];
                let t = sum + x;
                if sum.abs() >= x.abs() {
                    comp += (sum - t) + x;
                } else {
                    comp += (x - t) + sum;
                }
                sum = t;
            }
            (sum + comp) / rows.len() as f64
        })
        .collect()
}

/// Best agreement between two labelings over injective maps of cluster
/// ids; noise (`None`) only matches noise.
pub fn label_agreement(ours: &[Option<usize>], reference: &[i64]) -> f64 {
    let ours_ids: Vec<usize> = ours.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let ref_ids: Vec<i64> = reference.iter().copied().filter(|&l| l >= 0).collect::<BTreeSet<_>>().into_iter().collect();
    let mut best = 0usize;
    let mut assign = vec![None; ours_ids.len()];
    fn search(
        i: usize,
        ours_ids: &[usize],
        ref_ids: &[i64],
        assign: &mut Vec<Option<i64>>,
        ours: &[Option<usize>],
        reference: &[i64],
        best: &mut usize,
    ) {
        if i == ours_ids.len() {
            let score = ours
                .iter()
                .zip(reference)
                .filter(|(o, &r)| match o {
                    None => r < 0,
                    Some(c) => {
                        let idx = ours_ids.iter().position(|x| x == c).unwrap();
                        assign[idx] == Some(r)
                    }
                })
                .count();
            *best = (*best).max(score);
            return;
        }
        let candidates: Vec<Option<i64>> = ref_ids.iter().map(|&r| Some(r)).chain(std::iter::once(None)).collect();
        for cand in candidates {
            if cand.is_some() && assign[..i].contains(&cand) {
                continue;
            }
            assign[i] = cand;
            search(i + 1, ours_ids, ref_ids, assign, ours, reference, best);
        }
    }
    search(0, &ours_ids, &ref_ids, &mut assign, ours, reference, &mut best);
    best as f64 / ours.len() as f64
}

/// Generates a synthetic dump, writes it to a temporary directory and
/// loads it back through the regular ingestion path.
pub fn synth_store(params: &conceptlens::SynthParams) -> (conceptlens::ModelStore, conceptlens::ConceptSpec) {
    let dump = conceptlens::generate_dump(params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    dump.write_to(dir.path()).unwrap();
    (conceptlens::load_dump(dir.path()).unwrap(), dump.concept)
}
