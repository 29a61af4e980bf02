//! Concept Prediction Similarity: words placed by the share of their
//! sentences predicted as the first class, plus per-word change groups for
//! comparisons.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{normalize_word, ConceptSpec, ModelStore, PredictionRecord};
use crate::similarity::SkippedWord;

/// Default |Δx| below which a word counts as unchanged.
pub const DEFAULT_DELTA_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionPoint {
    pub word: String,
    pub pole_index: usize,
    /// Fraction of the word's sentences labeled class 0.
    pub r: f64,
    pub n_total: usize,
    /// `1 - r`, so a word predicted entirely as class 0 sits at x = 0.
    pub x: f64,
    /// Position within its pole, scaled to [0, 1].
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionLayout {
    pub points: Vec<PredictionPoint>,
    pub skipped: Vec<SkippedWord>,
}

/// `(count(label == 0) / n, n)` over the given records.
pub fn prediction_ratio<'a>(word: &str, records: impl IntoIterator<Item = &'a PredictionRecord>) -> Result<(f64, usize)> {
    let (mut zeros, mut total) = (0usize, 0usize);
    for rec in records {
        total += 1;
        if rec.label == 0 {
            zeros += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoPredictions(word.to_string()));
    }
    Ok((zeros as f64 / total as f64, total))
}

pub fn prediction_layout(concept: &ConceptSpec, store: &ModelStore) -> Result<PredictionLayout> {
    if !store.has_predictions() {
        return Err(Error::ModelHasNoHead(store.model_id().to_string()));
    }
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (pole_index, pole) in concept.poles().iter().enumerate() {
        let len = pole.words.len();
        for (i, word) in pole.words.iter().enumerate() {
            match prediction_ratio(word, store.predictions_for(word)) {
                Ok((r, n_total)) => {
                    let y = if len > 1 { i as f64 / (len - 1) as f64 } else { 0.0 };
                    points.push(PredictionPoint { word: word.clone(), pole_index, r, n_total, x: 1.0 - r, y });
                }
                Err(_) => skipped.push(SkippedWord { word: word.clone(), reason: "no prediction records".into() }),
            }
        }
    }
    Ok(PredictionLayout { points, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaGroup {
    TowardClass0,
    TowardClass1,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionDelta {
    pub word: String,
    pub dx: f64,
    pub group: DeltaGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionDeltas {
    pub deltas: Vec<PredictionDelta>,
    pub toward_class0: Vec<String>,
    pub toward_class1: Vec<String>,
    pub unchanged: Vec<String>,
    pub epsilon: f64,
}

/// `Δx = x_target - x_source` for every word in both layouts. A negative
/// Δx moves the word toward class 0.
pub fn prediction_deltas(source: &[PredictionPoint], target: &[PredictionPoint], epsilon: f64) -> PredictionDeltas {
    let by_word: HashMap<String, &PredictionPoint> = target.iter().map(|p| (normalize_word(&p.word), p)).collect();
    let mut out = PredictionDeltas {
        deltas: Vec::new(),
        toward_class0: Vec::new(),
        toward_class1: Vec::new(),
        unchanged: Vec::new(),
        epsilon,
    };
    for s in source {
        let Some(t) = by_word.get(&normalize_word(&s.word)) else { continue };
        let dx = t.x - s.x;
        let group = if dx.abs() < epsilon {
            out.unchanged.push(s.word.clone());
            DeltaGroup::Unchanged
        } else if dx < 0.0 {
            out.toward_class0.push(s.word.clone());
            DeltaGroup::TowardClass0
        } else {
            out.toward_class1.push(s.word.clone());
            DeltaGroup::TowardClass1
        };
        out.deltas.push(PredictionDelta { word: s.word.clone(), dx, group });
    }
    out
}
