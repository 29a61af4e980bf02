//! Concept Embedding Similarity: each explained word is placed by its mean
//! cosine similarity to the two poles of an anchor concept, and comparisons
//! bin per-word displacements into angular sectors.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{normalize_word, ConceptSpec, EmbeddingKind, ModelStore, PoleSpec};
use crate::store::word_vector;

/// Number of angular sectors used for displacement filters.
pub const SECTOR_COUNT: usize = 8;
/// Default displacement magnitude below which a word counts as unchanged.
pub const DEFAULT_DISPLACEMENT_EPSILON: f64 = 0.005;

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityPoint {
    pub word: String,
    /// Pole of the explained concept this word belongs to.
    pub pole_index: usize,
    /// Mean cosine to the second anchor pole.
    pub x: f64,
    /// Mean cosine to the first anchor pole.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedWord {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityLayout {
    pub points: Vec<SimilarityPoint>,
    pub skipped: Vec<SkippedWord>,
}

/// Mean cosine between `word_vec` and every anchor word that has a stored
/// vector. The explained word itself is left out when it is in the pole.
pub fn anchor_mean(
    word: &str,
    word_vec: &[f64],
    anchor_pole: &PoleSpec,
    store: &ModelStore,
    kind: EmbeddingKind,
    layer: u32,
) -> Result<f64> {
    let key = normalize_word(word);
    let mut sum = 0.0;
    let mut count = 0usize;
    for anchor in &anchor_pole.words {
        if normalize_word(anchor) == key {
            continue;
        }
        if let Some(v) = word_vector(store, anchor, kind, layer) {
            sum += cosine(word_vec, &v)?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyAnchor { pole: anchor_pole.label.clone(), word: word.to_string() });
    }
    Ok(sum / count as f64)
}

/// One point per explained-concept word that has a vector; the rest are
/// reported as skipped.
pub fn similarity_layout(
    concept: &ConceptSpec,
    anchor: &ConceptSpec,
    store: &ModelStore,
    kind: EmbeddingKind,
    layer: u32,
) -> Result<SimilarityLayout> {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (pole_index, pole) in concept.poles().iter().enumerate() {
        for word in &pole.words {
            let Some(v) = word_vector(store, word, kind, layer) else {
                skipped.push(SkippedWord {
                    word: word.clone(),
                    reason: format!("no {kind} vector at layer {layer}"),
                });
                continue;
            };
            let y = anchor_mean(word, &v, anchor.pole(0), store, kind, layer)?;
            let x = anchor_mean(word, &v, anchor.pole(1), store, kind, layer)?;
            points.push(SimilarityPoint { word: word.clone(), pole_index, x, y });
        }
    }
    Ok(SimilarityLayout { points, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementCategory {
    pub word: String,
    pub dx: f64,
    pub dy: f64,
    /// 45° bin of `atan2(dy, dx)`, sector 0 centered on +x. `None` when negligible.
    pub sector: Option<usize>,
    pub negligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementSummary {
    pub categories: Vec<DisplacementCategory>,
    /// Words per sector, in category order.
    pub sectors: Vec<Vec<String>>,
    pub negligible: Vec<String>,
    pub epsilon: f64,
}

impl DisplacementSummary {
    pub fn sector_counts(&self) -> Vec<usize> {
        self.sectors.iter().map(Vec::len).collect()
    }
}

/// Angular sector of a displacement vector.
pub fn sector_of(dx: f64, dy: f64) -> usize {
    let width = std::f64::consts::TAU / SECTOR_COUNT as f64;
    let angle = dy.atan2(dx).rem_euclid(std::f64::consts::TAU);
    ((angle + width / 2.0) / width).floor() as usize % SECTOR_COUNT
}

/// Bins the target-minus-source displacement of every word present in both
/// layouts.
pub fn displacement_categories(source: &[SimilarityPoint], target: &[SimilarityPoint], epsilon: f64) -> DisplacementSummary {
    let by_word: HashMap<String, &SimilarityPoint> = target.iter().map(|p| (normalize_word(&p.word), p)).collect();
    let mut categories = Vec::new();
    let mut sectors = vec![Vec::new(); SECTOR_COUNT];
    let mut negligible = Vec::new();
    for s in source {
        let Some(t) = by_word.get(&normalize_word(&s.word)) else { continue };
        let (dx, dy) = (t.x - s.x, t.y - s.y);
        let small = dx.hypot(dy) < epsilon;
        let sector = (!small).then(|| sector_of(dx, dy));
        match sector {
            Some(k) => sectors[k].push(s.word.clone()),
            None => negligible.push(s.word.clone()),
        }
        categories.push(DisplacementCategory { word: s.word.clone(), dx, dy, sector, negligible: small });
    }
    DisplacementSummary { categories, sectors, negligible, epsilon }
}
