mod common;

use std::time::Instant;

use common::*;
use conceptlens::projection::{euclidean_distances, knn2d, mds2, pca2, raw_stress, smacof, tsne2, TsneOptions};
use conceptlens::quality::dsc;
use proptest::prelude::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compares coordinates axis by axis, allowing one sign flip per axis.
fn matches_up_to_sign(ours: &[[f64; 2]], oracle: &[[f64; 2]], tol: f64) -> bool {
    (0..2).all(|axis| {
        let a: Vec<f64> = ours.iter().map(|p| p[axis]).collect();
        let b: Vec<f64> = oracle.iter().map(|p| p[axis]).collect();
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        max_abs_diff(&a, &b) < tol || max_abs_diff(&a, &neg) < tol
    })
}

#[test]
fn pca_matches_covariance_eigen_oracle() {
    let mut rng = rng(11);
    let mut elapsed = 0.0;
    for _ in 0..20 {
        let rows = random_matrix(&mut rng, 50, 10);
        let start = Instant::now();
        let ours = pca2(&rows).unwrap();
        elapsed += start.elapsed().as_secs_f64();
        let (oracle, variance) = pca_oracle(&rows);
        assert!(matches_up_to_sign(&ours.coords, &oracle, 1e-6));
        assert!((ours.explained_variance[0] - variance[0]).abs() < 1e-9);
        assert!((ours.explained_variance[1] - variance[1]).abs() < 1e-9);
    }
    assert!(elapsed < 1.0, "20 PCA runs took {elapsed:.3}s");
}

#[test]
fn pca_wide_matrix_uses_same_axes() {
    // n < d goes through the Gram path.
    let mut rng = rng(5);
    let rows = random_matrix(&mut rng, 8, 30);
    let ours = pca2(&rows).unwrap();
    let (oracle, _) = pca_oracle(&rows);
    assert!(matches_up_to_sign(&ours.coords, &oracle, 1e-6));
}

#[test]
fn pca_recovers_planar_data_embedded_by_rotation() {
    let mut rng = rng(3);
    let planar: Vec<Vec<f64>> = (0..40).map(|_| vec![3.0 * normal(&mut rng), normal(&mut rng)]).collect();
    // Random orthonormal 2-frame in 6-D via Gram-Schmidt.
    let mut a: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= na);
    let mut b: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
    let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    b.iter_mut().zip(&a).for_each(|(x, y)| *x -= ab * y);
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    b.iter_mut().for_each(|x| *x /= nb);
    let embedded: Vec<Vec<f64>> = planar.iter().map(|p| (0..6).map(|k| p[0] * a[k] + p[1] * b[k]).collect()).collect();
    let out = pca2(&embedded).unwrap();
    let d2 = pairwise(&out.coords);
    let dn = pairwise_nd(&embedded);
    assert!(max_abs_diff(&d2, &dn) < 1e-8);
}

#[test]
fn knn_matches_brute_force_with_ties() {
    let mut rng = rng(21);
    // Integer grid coordinates make many equal distances.
    let points: Vec<[f64; 2]> =
        (0..200).map(|_| [(normal(&mut rng) * 3.0).round(), (normal(&mut rng) * 3.0).round()]).collect();
    let mut words: Vec<String> = (0..200).map(|i| format!("w{:03}", (i * 7919) % 200)).collect();
    words.reverse();
    let ours = knn2d(&words, &points, 10);
    let oracle = brute_knn(&words, &points, 10);
    assert_eq!(ours, oracle);
}

#[test]
fn mds_stress_never_increases() {
    let mut rng = rng(8);
    for _ in 0..5 {
        let rows = random_matrix(&mut rng, 30, 6);
        let out = mds2(&rows).unwrap();
        for w in out.stress_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "stress went up: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn smacof_from_random_start_is_monotone() {
    let mut rng = rng(9);
    let rows = random_matrix(&mut rng, 25, 5);
    let dist = euclidean_distances(&rows).unwrap();
    let init: Vec<[f64; 2]> = (0..25).map(|_| [normal(&mut rng), normal(&mut rng)]).collect();
    let out = smacof(&dist, init, 200, 0.0);
    assert!(out.stress_history.len() > 10);
    for w in out.stress_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    assert!((raw_stress(&dist, &out.coords) - out.stress).abs() < 1e-12);
}

#[test]
fn mds_recovers_exact_planar_distances() {
    let mut rng = rng(4);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![normal(&mut rng) * 2.0, normal(&mut rng)]).collect();
    let out = mds2(&rows).unwrap();
    assert!(max_abs_diff(&pairwise(&out.coords), &pairwise_nd(&rows)) < 1e-6);
}

#[test]
fn mds_equilateral_triangle() {
    let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let out = mds2(&rows).unwrap();
    for d in pairwise(&out.coords) {
        assert!((d - 2f64.sqrt()).abs() < 1e-6);
    }
}

fn three_blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
    blobs(&mut rng(17), 50, &[30, 30, 30], 4.0, 1.0)
}

#[test]
fn tsne_separates_three_blobs() {
    let (rows, labels) = three_blobs();
    let start = Instant::now();
    let coords = tsne2(&rows, &TsneOptions::new(25.0, 0, 1000), None).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let score = dsc(&coords, &labels).unwrap();
    assert!(score >= 0.9, "DSC {score}");
    assert!(elapsed < 30.0, "t-SNE took {elapsed:.1}s");
}

#[test]
fn tsne_is_bitwise_deterministic() {
    let (rows, _) = three_blobs();
    let options = TsneOptions::new(20.0, 42, 300);
    let a = tsne2(&rows, &options, None).unwrap();
    let b = tsne2(&rows, &options, None).unwrap();
    let bits = |c: &[[f64; 2]]| c.iter().flat_map(|p| [p[0].to_bits(), p[1].to_bits()]).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn tsne_cancellation_is_honored() {
    let (rows, _) = three_blobs();
    let flag = std::sync::atomic::AtomicBool::new(true);
    assert!(matches!(
        tsne2(&rows, &TsneOptions::new(20.0, 0, 1000), Some(&flag)),
        Err(conceptlens::Error::Cancelled)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pca_distances_invariant_under_orthogonal_maps(seed in 0u64..1000, angle in 0.0f64..6.28) {
        let mut r = rng(seed);
        let rows = random_matrix(&mut r, 20, 4);
        let (c, s) = (angle.cos(), angle.sin());
        // Rotate the first two coordinates and reflect the third.
        let moved: Vec<Vec<f64>> = rows
            .iter()
            .map(|x| vec![c * x[0] - s * x[1], s * x[0] + c * x[1], -x[2], x[3]])
            .collect();
        let a = pca2(&rows).unwrap();
        let b = pca2(&moved).unwrap();
        prop_assert!(max_abs_diff(&pairwise(&a.coords), &pairwise(&b.coords)) < 1e-8);
    }

    #[test]
    fn knn_lists_are_sorted_and_exclude_self(seed in 0u64..1000, k in 1usize..8) {
        let mut r = rng(seed);
        let points: Vec<[f64; 2]> = (0..30).map(|_| [normal(&mut r), normal(&mut r)]).collect();
        let words: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let lists = knn2d(&words, &points, k);
        for (i, list) in lists.iter().enumerate() {
            prop_assert_eq!(list.len(), k);
            prop_assert!(!list.contains(&i));
            let d: Vec<f64> = list.iter().map(|&j| (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1])).collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
