mod common;

use common::*;
use conceptlens::similarity::{displacement_categories, sector_of, similarity_layout, SimilarityPoint, SECTOR_COUNT};
use conceptlens::{ConceptSpec, EmbeddingKind, ModelStore, WordVector};
use proptest::prelude::*;
use serde_json::json;

fn concept(name: &str, a: &[&str], b: &[&str]) -> ConceptSpec {
    let text = json!({ "name": name, "poles": [{ "label": format!("{name} a"), "words": a }, { "label": format!("{name} b"), "words": b }] });
    ConceptSpec::from_json(&text.to_string()).unwrap()
}

fn random_store(seed: u64, words: &[&str], d: usize, scale: impl Fn(usize) -> f32) -> ModelStore {
    let mut r = rng(seed);
    let mut b = ModelStore::builder("m", "base", d, 1);
    for (i, w) in words.iter().enumerate() {
        let vector: Vec<f32> = (0..d).map(|_| normal(&mut r) as f32 * scale(i)).collect();
        b.vector(WordVector { word: w.to_string(), kind: EmbeddingKind::Contextualized, layer: 1, vector, occurrence_count: 1 });
    }
    b.build()
}

fn cos(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

#[test]
fn layout_matches_brute_force_means() {
    let words = ["john", "mary", "paul", "anna", "he", "him", "she", "her"];
    let store = random_store(1, &words, 12, |_| 1.0);
    let names = concept("names", &["john", "paul", "ghost"], &["mary", "anna"]);
    let pronouns = concept("pronouns", &["he", "him"], &["she", "her"]);
    let layout = similarity_layout(&names, &pronouns, &store, EmbeddingKind::Contextualized, 1).unwrap();
    let vec_of = |w: &str| store.get(w, EmbeddingKind::Contextualized, 1).unwrap().to_f64();
    assert_eq!(layout.points.len(), 4);
    assert_eq!(layout.skipped.len(), 1);
    assert_eq!(layout.skipped[0].word, "ghost");
    for p in &layout.points {
        let v = vec_of(&p.word);
        let y = (cos(&v, &vec_of("he")) + cos(&v, &vec_of("him"))) / 2.0;
        let x = (cos(&v, &vec_of("she")) + cos(&v, &vec_of("her"))) / 2.0;
        assert!((p.y - y).abs() < 1e-12 && (p.x - x).abs() < 1e-12, "{}", p.word);
    }
}

#[test]
fn anchor_word_is_excluded_from_its_own_mean() {
    let words = ["a1", "a2", "a3", "b1", "b2"];
    let store = random_store(2, &words, 6, |_| 1.0);
    let c = concept("c", &["a1", "a2", "a3"], &["b1", "b2"]);
    let layout = similarity_layout(&c, &c, &store, EmbeddingKind::Contextualized, 1).unwrap();
    let v = |w: &str| store.get(w, EmbeddingKind::Contextualized, 1).unwrap().to_f64();
    let a1 = layout.points.iter().find(|p| p.word == "a1").unwrap();
    let y = (cos(&v("a1"), &v("a2")) + cos(&v("a1"), &v("a3"))) / 2.0;
    assert!((a1.y - y).abs() < 1e-12);
}

#[test]
fn coherent_poles_sit_on_their_side_of_the_diagonal() {
    // Two tight direction clusters: words near the first anchor pole get y > x.
    let mut r = rng(3);
    let d = 16;
    let base: [Vec<f64>; 2] = [(0..d).map(|_| normal(&mut r)).collect(), (0..d).map(|_| normal(&mut r)).collect()];
    let mut b = ModelStore::builder("m", "base", d, 1);
    let mut pole_words = [Vec::new(), Vec::new()];
    for (p, center) in base.iter().enumerate() {
        for i in 0..6 {
            let w = format!("p{p}_{i}");
            let vector = center.iter().map(|c| (c + 0.1 * normal(&mut r)) as f32).collect();
            b.vector(WordVector { word: w.clone(), kind: EmbeddingKind::Contextualized, layer: 1, vector, occurrence_count: 1 });
            pole_words[p].push(w);
        }
    }
    let store = b.build();
    let a: Vec<&str> = pole_words[0].iter().map(String::as_str).collect();
    let bb: Vec<&str> = pole_words[1].iter().map(String::as_str).collect();
    let c = concept("c", &a, &bb);
    let layout = similarity_layout(&c, &c, &store, EmbeddingKind::Contextualized, 1).unwrap();
    for p in &layout.points {
        if p.pole_index == 0 {
            assert!(p.y > p.x);
        } else {
            assert!(p.x > p.y);
        }
    }
}

#[test]
fn sectors_match_dot_product_oracle() {
    let mut r = rng(4);
    for _ in 0..5000 {
        let (dx, dy) = (normal(&mut r), normal(&mut r));
        assert_eq!(sector_of(dx, dy), sector_oracle(dx, dy), "({dx}, {dy})");
    }
    // Axis directions land in the sector they name.
    assert_eq!(sector_of(1.0, 0.0), 0);
    assert_eq!(sector_of(0.0, 1.0), 2);
    assert_eq!(sector_of(-1.0, 0.0), 4);
    assert_eq!(sector_of(0.0, -1.0), 6);
}

#[test]
fn displacement_bins_and_epsilon() {
    let pt = |w: &str, x: f64, y: f64| SimilarityPoint { word: w.into(), pole_index: 0, x, y };
    let src = vec![pt("a", 0.0, 0.0), pt("b", 0.0, 0.0), pt("c", 0.5, 0.5), pt("only_source", 0.0, 0.0)];
    let tgt = vec![pt("A", 0.1, 0.0), pt("b", 0.001, 0.001), pt("c", 0.4, 0.6)];
    let summary = displacement_categories(&src, &tgt, 0.005);
    assert_eq!(summary.categories.len(), 3);
    assert_eq!(summary.negligible, vec!["b"]);
    assert_eq!(summary.sectors[0], vec!["a"]);
    assert_eq!(summary.sectors[3], vec!["c"]);
    assert_eq!(summary.sector_counts().iter().sum::<usize>(), 2);
    assert_eq!(summary.sectors.len(), SECTOR_COUNT);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn layout_ignores_vector_scale(seed in 0u64..1000) {
        let words = ["a1", "a2", "b1", "b2", "x1", "x2", "y1", "y2"];
        let plain = random_store(seed, &words, 8, |_| 1.0);
        let scaled = random_store(seed, &words, 8, |i| 0.25 * (1 + i) as f32);
        let c = concept("c", &["x1", "x2"], &["y1", "y2"]);
        let anchor = concept("a", &["a1", "a2"], &["b1", "b2"]);
        let l1 = similarity_layout(&c, &anchor, &plain, EmbeddingKind::Contextualized, 1).unwrap();
        let l2 = similarity_layout(&c, &anchor, &scaled, EmbeddingKind::Contextualized, 1).unwrap();
        for (p, q) in l1.points.iter().zip(&l2.points) {
            prop_assert!((p.x - q.x).abs() < 1e-6 && (p.y - q.y).abs() < 1e-6);
        }
    }

    #[test]
    fn anchor_order_does_not_matter(seed in 0u64..1000) {
        let words = ["a1", "a2", "a3", "b1", "b2", "x1", "y1"];
        let store = random_store(seed, &words, 8, |_| 1.0);
        let c = concept("c", &["x1", "a1"], &["y1", "b1"]);
        let anchor = concept("a", &["a1", "a2", "a3"], &["b1", "b2"]);
        let reversed = concept("a", &["a3", "a2", "a1"], &["b2", "b1"]);
        let l1 = similarity_layout(&c, &anchor, &store, EmbeddingKind::Contextualized, 1).unwrap();
        let l2 = similarity_layout(&c, &reversed, &store, EmbeddingKind::Contextualized, 1).unwrap();
        for (p, q) in l1.points.iter().zip(&l2.points) {
            prop_assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
        }
    }
}
