//! Model dump ingestion and store lookups.
//!
//! A dump is a directory with four files:
//!
//! ```text
//! manifest.json       {"model_id", "base_model", "d", "L", "has_predictions", "prediction_labels"}
//! embeddings.jsonl    {"word", "kind": "context0"|"contextual", "layer", "vector": [..], "count"?}
//! predictions.jsonl   {"word", "sentence_id", "label"}
//! sentences.jsonl     {"sentence_id", "word", "text"}
//! ```
//!
//! Embedding rows may be per-occurrence or already aggregated per word.
//! Rows sharing `(word, kind, layer)` are merged by their mean, weighted by
//! `count` (default 1). Words split into several sub-tokens must already be
//! averaged by the extractor: every row is treated as one word-level vector.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_word, validate_store, EmbeddingKind, ModelStore, PredictionRecord, WordVector};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const SENTENCES_FILE: &str = "sentences.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub model_id: String,
    pub base_model: String,
    #[serde(rename = "d")]
    pub dim: usize,
    #[serde(rename = "L")]
    pub layers: u32,
    #[serde(default)]
    pub has_predictions: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub word: String,
    pub kind: EmbeddingKind,
    pub layer: u32,
    pub vector: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub sentence_id: String,
    pub word: String,
    pub text: String,
}

/// Componentwise arithmetic mean of equally long vectors.
pub fn aggregate_mean(occurrences: &[Vec<f64>]) -> Result<Vec<f64>> {
    let weighted: Vec<(&[f64], f64)> = occurrences.iter().map(|v| (v.as_slice(), 1.0)).collect();
    aggregate_weighted(&weighted)
}

fn aggregate_weighted(occurrences: &[(&[f64], f64)]) -> Result<Vec<f64>> {
    let (first, _) = occurrences.first().ok_or(Error::EmptyOccurrences)?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    let mut total = 0.0;
    for (v, w) in occurrences {
        if v.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, found: v.len() });
        }
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += w * x;
        }
        total += w;
    }
    if occurrences.len() == 1 && total == 1.0 {
        return Ok(first.to_vec());
    }
    Ok(sum.into_iter().map(|s| s / total).collect())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, required: bool) -> Result<Vec<(usize, T)>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Parse { file: path.into(), line: 0, message: "file is missing".into() })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(line).map_err(|e| Error::Parse {
            file: path.into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

pub fn read_manifest(dir: &Path) -> Result<DumpManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Parse { file: path.clone(), line: 0, message: "manifest is missing".into() },
        _ => Error::io(&path, e),
    })?;
    let manifest: DumpManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if manifest.dim == 0 || manifest.layers == 0 {
        return Err(Error::Parse { file: path, line: 1, message: "d and L must both be at least 1".into() });
    }
    Ok(manifest)
}

/// Parses a dump directory into a validated [`ModelStore`].
pub fn load_dump(dir: impl AsRef<Path>) -> Result<ModelStore> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let embeddings: Vec<(usize, EmbeddingRow)> = read_jsonl(&dir.join(EMBEDDINGS_FILE), false)?;
    let predictions: Vec<(usize, PredictionRecord)> = read_jsonl(&dir.join(PREDICTIONS_FILE), false)?;
    let sentences: Vec<(usize, SentenceRow)> = read_jsonl(&dir.join(SENTENCES_FILE), false)?;

    // Group by key, keeping first-seen display form. BTreeMap keeps the
    // build deterministic.
    let mut groups: BTreeMap<(String, EmbeddingKind, u32), (String, Vec<EmbeddingRow>)> = BTreeMap::new();
    for (_, row) in embeddings {
        let key = (normalize_word(&row.word), row.kind, row.layer);
        groups
            .entry(key)
            .or_insert_with(|| (row.word.trim().to_string(), Vec::new()))
            .1
            .push(row);
    }

    let mut builder = ModelStore::builder(manifest.model_id, manifest.base_model, manifest.dim, manifest.layers);
    for ((_, kind, layer), (word, rows)) in groups {
        let occurrence_count: u32 = rows.iter().map(|r| r.count.unwrap_or(1)).sum();
        let vector = if rows.len() == 1 {
            rows.into_iter().next().expect("one row").vector
        } else {
            let as_f64: Vec<(Vec<f64>, f64)> = rows
                .iter()
                .map(|r| (r.vector.iter().map(|&x| f64::from(x)).collect(), f64::from(r.count.unwrap_or(1))))
                .collect();
            let borrowed: Vec<(&[f64], f64)> = as_f64.iter().map(|(v, w)| (v.as_slice(), *w)).collect();
            match aggregate_weighted(&borrowed) {
                Ok(mean) => mean.into_iter().map(|x| x as f32).collect(),
                // Ragged groups fall through to validation, which names the word.
                Err(_) => rows.into_iter().find(|r| r.vector.len() != manifest.dim).expect("ragged row").vector,
            }
        };
        builder.vector(WordVector { word, kind, layer, vector, occurrence_count });
    }
    for (_, s) in sentences {
        builder.sentence(s.sentence_id, s.word, s.text);
    }
    for (_, p) in predictions {
        builder.prediction(p);
    }
    builder.prediction_labels(manifest.prediction_labels);

    let store = builder.build();
    validate_store(&store).map_err(Error::Validation)?;
    Ok(store)
}

/// Stored vector at 64-bit precision, or `None` if the model never saw the word.
pub fn word_vector(store: &ModelStore, word: &str, kind: EmbeddingKind, layer: u32) -> Option<Vec<f64>> {
    store.get(word, kind, layer).map(WordVector::to_f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceEntry {
    pub sentence_id: String,
    pub text: String,
    pub label: Option<i64>,
}

/// Every stored sentence that uses `word`, ordered by sentence id, with the
/// prediction label joined in when one exists.
pub fn sentences_for(store: &ModelStore, word: &str) -> Vec<SentenceEntry> {
    store
        .sentence_ids_for(word)
        .iter()
        .filter_map(|id| store.sentence(id))
        .map(|s| SentenceEntry {
            sentence_id: s.sentence_id.clone(),
            text: s.text.clone(),
            label: store.label_for(word, &s.sentence_id),
        })
        .collect()
}

/// Serializes rows as JSON lines.
pub fn to_jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, &row).expect("row serialization is infallible");
        out.push(b'\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) {
        let mut f = fs::File::create(dir.join(name)).unwrap();
        f.write_all(body.as_bytes()).unwrap();
    }

    fn manifest(dir: &Path, d: usize) {
        write(dir, MANIFEST_FILE, &format!(r#"{{"model_id":"m","base_model":"bert-base-uncased","d":{d},"L":2}}"#));
    }

    #[test]
    fn mean_of_two() {
        assert_eq!(aggregate_mean(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn mean_of_one_is_identity() {
        let v = vec![0.1, -3.7, 1e-300];
        assert_eq!(aggregate_mean(std::slice::from_ref(&v)).unwrap(), v);
    }

    #[test]
    fn mean_errors() {
        assert!(matches!(aggregate_mean(&[]), Err(Error::EmptyOccurrences)));
        assert!(matches!(aggregate_mean(&[vec![1.0], vec![1.0, 2.0]]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn missing_manifest_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dump(dir.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        manifest(dir.path(), 2);
        write(
            dir.path(),
            EMBEDDINGS_FILE,
            "{\"word\":\"a\",\"kind\":\"context0\",\"layer\":1,\"vector\":[1,2]}\n{not json}\n",
        );
        match load_dump(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn occurrences_are_averaged() {
        let dir = tempfile::tempdir().unwrap();
        manifest(dir.path(), 2);
        write(
            dir.path(),
            EMBEDDINGS_FILE,
            concat!(
                "{\"word\":\"good\",\"kind\":\"contextual\",\"layer\":1,\"vector\":[1.0,3.0]}\n",
                "{\"word\":\"Good\",\"kind\":\"contextual\",\"layer\":1,\"vector\":[2.0,-1.0]}\n",
                "{\"word\":\"good\",\"kind\":\"context0\",\"layer\":1,\"vector\":[5.0,5.0]}\n",
            ),
        );
        let store = load_dump(dir.path()).unwrap();
        let v = store.get("good", EmbeddingKind::Contextualized, 1).unwrap();
        assert_eq!(v.vector, vec![1.5, 1.0]);
        assert_eq!(v.occurrence_count, 2);
        assert_eq!(v.word, "good");
        let c0 = store.get("GOOD", EmbeddingKind::Context0, 1).unwrap();
        assert_eq!(c0.occurrence_count, 1);
        assert_eq!(store.vector_count(), 2);
    }

    #[test]
    fn ragged_group_names_the_word() {
        let dir = tempfile::tempdir().unwrap();
        manifest(dir.path(), 2);
        write(
            dir.path(),
            EMBEDDINGS_FILE,
            concat!(
                "{\"word\":\"odd\",\"kind\":\"contextual\",\"layer\":1,\"vector\":[1.0,3.0]}\n",
                "{\"word\":\"odd\",\"kind\":\"contextual\",\"layer\":1,\"vector\":[2.0]}\n",
            ),
        );
        match load_dump(dir.path()) {
            Err(Error::Validation(report)) => assert!(report.to_string().contains("`odd`")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lookup_and_sentences() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            MANIFEST_FILE,
            r#"{"model_id":"m","base_model":"b","d":1,"L":1,"has_predictions":true,"prediction_labels":["NEGATIVE","POSITIVE"]}"#,
        );
        write(dir.path(), EMBEDDINGS_FILE, "{\"word\":\"kind\",\"kind\":\"contextual\",\"layer\":1,\"vector\":[0.5]}\n");
        write(
            dir.path(),
            SENTENCES_FILE,
            concat!(
                "{\"sentence_id\":\"s2\",\"word\":\"kind\",\"text\":\"so kind\"}\n",
                "{\"sentence_id\":\"s1\",\"word\":\"kind\",\"text\":\"kind people\"}\n",
                "{\"sentence_id\":\"s3\",\"word\":\"kind\",\"text\":\"a kind act\"}\n",
            ),
        );
        write(
            dir.path(),
            PREDICTIONS_FILE,
            "{\"word\":\"kind\",\"sentence_id\":\"s1\",\"label\":1}\n{\"word\":\"kind\",\"sentence_id\":\"s3\",\"label\":0}\n",
        );
        let store = load_dump(dir.path()).unwrap();
        assert_eq!(word_vector(&store, "Kind", EmbeddingKind::Contextualized, 1), Some(vec![0.5]));
        assert_eq!(word_vector(&store, "mean", EmbeddingKind::Contextualized, 1), None);
        let entries = sentences_for(&store, "kind");
        let ids: Vec<_> = entries.iter().map(|e| e.sentence_id.as_str()).collect();
        assert_eq!(ids, ["s1", "s2", "s3"]);
        let labels: Vec<_> = entries.iter().map(|e| e.label).collect();
        assert_eq!(labels, [Some(1), None, Some(0)]);
        assert!(sentences_for(&store, "mean").is_empty());
    }
}
