mod common;

use std::fs;
use std::path::Path;

use common::*;
use conceptlens::store::{to_jsonl, EmbeddingRow, SentenceRow};
use conceptlens::{aggregate_mean, load_dump, sentences_for, word_vector, EmbeddingKind, Error, PredictionRecord};
use proptest::prelude::*;
use serde_json::json;

fn write_manifest(dir: &Path, d: usize, layers: u32, labels: Option<[&str; 2]>) {
    let mut m = json!({ "model_id": "m", "base_model": "b", "d": d, "L": layers, "has_predictions": labels.is_some() });
    if let Some(l) = labels {
        m["prediction_labels"] = json!(l);
    }
    fs::write(dir.join("manifest.json"), m.to_string()).unwrap();
}

fn row(word: &str, kind: EmbeddingKind, layer: u32, vector: Vec<f32>) -> EmbeddingRow {
    EmbeddingRow { word: word.into(), kind, layer, vector, count: None }
}

#[test]
fn aggregate_mean_matches_compensated_sum() {
    let mut r = rng(1);
    // Mixed magnitudes make naive summation lose digits.
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| (0..16).map(|_| normal(&mut r) * if i % 3 == 0 { 1e3 } else { 1e-3 }).collect())
        .collect();
    let ours = aggregate_mean(&rows).unwrap();
    let oracle = compensated_mean(&rows);
    let scale = rows.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9 * scale.max(b.abs()), "{a} vs {b}");
    }
}

#[test]
fn aggregate_mean_of_nothing_errors() {
    assert!(matches!(aggregate_mean(&[]), Err(Error::EmptyOccurrences)));
    assert!(matches!(aggregate_mean(&[vec![1.0], vec![1.0, 2.0]]), Err(Error::LengthMismatch { .. })));
}

#[test]
fn occurrence_rows_are_averaged_on_load() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 3, 2, None);
    let rows = vec![
        row("Bank", EmbeddingKind::Contextualized, 1, vec![1.0, 2.0, 3.0]),
        row("bank", EmbeddingKind::Contextualized, 1, vec![3.0, 2.0, 1.0]),
        row("bank", EmbeddingKind::Context0, 1, vec![0.5, 0.5, 0.5]),
    ];
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl(&rows)).unwrap();
    let store = load_dump(dir.path()).unwrap();
    let v = store.get("BANK", EmbeddingKind::Contextualized, 1).unwrap();
    assert_eq!(v.vector, vec![2.0, 2.0, 2.0]);
    assert_eq!(v.occurrence_count, 2);
    assert_eq!(v.word, "Bank");
    assert!(word_vector(&store, "bank", EmbeddingKind::Contextualized, 2).is_none());
}

#[test]
fn counted_rows_are_weighted() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 1, 1, None);
    let mut a = row("w", EmbeddingKind::Contextualized, 1, vec![0.0]);
    a.count = Some(3);
    let b = row("w", EmbeddingKind::Contextualized, 1, vec![4.0]);
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl([a, b])).unwrap();
    let store = load_dump(dir.path()).unwrap();
    assert_eq!(store.get("w", EmbeddingKind::Contextualized, 1).unwrap().vector, vec![1.0]);
}

#[test]
fn loaded_mean_matches_oracle_at_f32_precision() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 8, 1, None);
    let mut r = rng(2);
    let vectors: Vec<Vec<f32>> = (0..300).map(|_| (0..8).map(|_| normal(&mut r) as f32).collect()).collect();
    let rows: Vec<EmbeddingRow> = vectors.iter().map(|v| row("w", EmbeddingKind::Contextualized, 1, v.clone())).collect();
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl(&rows)).unwrap();
    let store = load_dump(dir.path()).unwrap();
    let as_f64: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|&x| f64::from(x)).collect()).collect();
    let oracle = compensated_mean(&as_f64);
    let ours = word_vector(&store, "w", EmbeddingKind::Contextualized, 1).unwrap();
    for (a, b) in ours.iter().zip(&oracle) {
        assert_eq!(*a as f32, *b as f32);
    }
}

#[test]
fn missing_manifest_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    match load_dump(dir.path()) {
        Err(Error::Parse { file, line: 0, .. }) => assert!(file.ends_with("manifest.json")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bad_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 2, 1, None);
    let good = String::from_utf8(to_jsonl([row("a", EmbeddingKind::Context0, 1, vec![1.0, 0.0])])).unwrap();
    fs::write(dir.path().join("embeddings.jsonl"), format!("{good}{good}{{not json\n")).unwrap();
    match load_dump(dir.path()) {
        Err(Error::Parse { file, line, .. }) => {
            assert!(file.ends_with("embeddings.jsonl"));
            assert_eq!(line, 3);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_contents_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 2, 1, None);
    let rows = vec![
        row("a", EmbeddingKind::Context0, 1, vec![1.0, 0.0, 0.0]),
        row("b", EmbeddingKind::Context0, 2, vec![1.0, 0.0]),
    ];
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl(&rows)).unwrap();
    match load_dump(dir.path()) {
        Err(Error::Validation(report)) => {
            let text = report.to_string();
            assert!(text.contains("DimensionMismatch"), "{text}");
            assert!(text.contains("LayerOutOfRange"), "{text}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sentences_join_predictions() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 2, 1, Some(["neg", "pos"]));
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl([row("cat", EmbeddingKind::Context0, 1, vec![1.0, 0.0])])).unwrap();
    let sentences = vec![
        SentenceRow { sentence_id: "s2".into(), word: "cat".into(), text: "The cat sat.".into() },
        SentenceRow { sentence_id: "s1".into(), word: "cat".into(), text: "A cat ran.".into() },
        SentenceRow { sentence_id: "s3".into(), word: "dog".into(), text: "A dog ran.".into() },
    ];
    fs::write(dir.path().join("sentences.jsonl"), to_jsonl(&sentences)).unwrap();
    let predictions = vec![PredictionRecord { word: "cat".into(), sentence_id: "s2".into(), label: 1 }];
    fs::write(dir.path().join("predictions.jsonl"), to_jsonl(&predictions)).unwrap();
    let store = load_dump(dir.path()).unwrap();
    let entries = sentences_for(&store, "Cat");
    // Oracle: the cat sentences sorted by id, label looked up by hand.
    let ids: Vec<&str> = entries.iter().map(|e| e.sentence_id.as_str()).collect();
    assert_eq!(ids, vec!["s1", "s2"]);
    assert_eq!(entries[0].label, None);
    assert_eq!(entries[1].label, Some(1));
    assert_eq!(entries[1].text, "The cat sat.");
}

#[test]
fn dangling_prediction_reference_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), 2, 1, Some(["neg", "pos"]));
    fs::write(dir.path().join("embeddings.jsonl"), to_jsonl([row("cat", EmbeddingKind::Context0, 1, vec![1.0, 0.0])])).unwrap();
    let predictions = vec![PredictionRecord { word: "cat".into(), sentence_id: "nowhere".into(), label: 0 }];
    fs::write(dir.path().join("predictions.jsonl"), to_jsonl(&predictions)).unwrap();
    assert!(matches!(load_dump(dir.path()), Err(Error::Validation(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn row_order_does_not_change_the_store(seed in 0u64..1000) {
        let mut r = rng(seed);
        let rows: Vec<EmbeddingRow> = (0..24)
            .map(|i| {
                let v = vec![(normal(&mut r) * 4.0).round() as f32, (normal(&mut r) * 4.0).round() as f32];
                row(&format!("w{}", i % 5), EmbeddingKind::Contextualized, 1 + (i % 2) as u32, v)
            })
            .collect();
        let mut shuffled = rows.clone();
        for i in (1..shuffled.len()).rev() {
            let j = (uniform(&mut r) * (i + 1) as f64) as usize;
            shuffled.swap(i, j);
        }
        let load = |rows: &[EmbeddingRow]| {
            let dir = tempfile::tempdir().unwrap();
            write_manifest(dir.path(), 2, 2, None);
            fs::write(dir.path().join("embeddings.jsonl"), to_jsonl(rows)).unwrap();
            load_dump(dir.path()).unwrap()
        };
        let (a, b) = (load(&rows), load(&shuffled));
        for w in 0..5 {
            for layer in 1..=2 {
                let key = format!("w{w}");
                // Integer-valued inputs keep the sums exact in any order.
                prop_assert_eq!(
                    a.get(&key, EmbeddingKind::Contextualized, layer).map(|v| v.vector.clone()),
                    b.get(&key, EmbeddingKind::Contextualized, layer).map(|v| v.vector.clone())
                );
            }
        }
    }
}
