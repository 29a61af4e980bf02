//! Guidance glyph scores: centroid distance consistency of 2-D layouts,
//! evaluated per layer.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::explain::{layout_with_method, ResolvedExplanation};
use crate::model::{EmbeddingKind, ExplanationType, ModelStore, ProjectionMethod};

pub const DSC_VARIANT: &str = "centroid distance consistency: own-class centroid strictly nearest, ties inconsistent";

/// Fraction of points whose own class centroid is strictly closer than
/// every other class centroid.
pub fn dsc(points: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: points.len(), found: labels.len() });
    }
    let mut sums: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for (p, &l) in points.iter().zip(labels) {
        let e = sums.entry(l).or_insert((0.0, 0.0, 0));
        e.0 += p[0];
        e.1 += p[1];
        e.2 += 1;
    }
    if sums.len() < 2 {
        return Err(Error::SingleClass);
    }
    let centroids: BTreeMap<usize, [f64; 2]> =
        sums.into_iter().map(|(l, (sx, sy, n))| (l, [sx / n as f64, sy / n as f64])).collect();
    let sq = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let consistent = points
        .iter()
        .zip(labels)
        .filter(|&(&p, l)| {
            let own = sq(p, centroids[l]);
            centroids.iter().filter(|(m, _)| *m != l).all(|(_, &c)| own < sq(p, c))
        })
        .count();
    Ok(consistent as f64 / points.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerScore {
    pub layer: u32,
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlyphSeries {
    pub model_id: String,
    pub explanation_id: String,
    pub kind: EmbeddingKind,
    pub dsc_variant: &'static str,
    pub scores: Vec<LayerScore>,
}

/// Score of the explanation's layout at one layer. Projections always use
/// PCA here so the score is cheap and deterministic.
pub fn layer_score(resolved: &ResolvedExplanation, store: &ModelStore, layer: u32) -> Result<f64> {
    layout_with_method(resolved, store, layer, Some(ProjectionMethod::Pca), None)?.dsc()
}

/// One score per layer `1..=L`. Layers that fail are recorded without a
/// score. Prediction layouts do not depend on the layer, so every layer
/// carries the same score.
pub fn glyph_series(resolved: &ResolvedExplanation, store: &ModelStore, explanation_id: &str) -> GlyphSeries {
    let entry = |layer: u32, r: &Result<f64>| match r {
        Ok(s) => LayerScore { layer, score: Some(*s), error: None },
        Err(e) => LayerScore { layer, score: None, error: Some(e.to_string()) },
    };
    let scores = if resolved.config.explanation_type == ExplanationType::PredSimilarity {
        let r = layer_score(resolved, store, 1);
        (1..=store.layers()).map(|l| entry(l, &r)).collect()
    } else {
        (1..=store.layers()).map(|l| entry(l, &layer_score(resolved, store, l))).collect()
    };
    GlyphSeries {
        model_id: store.model_id().to_string(),
        explanation_id: explanation_id.to_string(),
        kind: resolved.config.kind,
        dsc_variant: DSC_VARIANT,
        scores,
    }
}
