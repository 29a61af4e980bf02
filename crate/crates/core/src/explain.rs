//! Render-ready payloads for single-model and comparison explanations, and
//! word detail lookups.

use std::collections::BTreeMap;
use std::sync::atomic::AtomicBool;

use serde::Serialize;

use crate::contours::{contour_summary, shared_frame, ContourSet, GridFrame};
use crate::error::{Error, Result};
use crate::model::{
    normalize_word, ConceptSpec, EmbeddingKind, ExplanationConfig, ExplanationType, ModelStore, ProjectionMethod,
};
use crate::prediction::{prediction_deltas, prediction_layout, PredictionDeltas, PredictionLayout, DEFAULT_DELTA_EPSILON};
use crate::projection::{
    neighborhood_categories, overlap_annotations, projection_layout, CoordinateSource, NeighborhoodCategory,
    OverlapAnnotation, ProjectionLayout, ProjectionRequest,
};
use crate::quality::{dsc, DSC_VARIANT};
use crate::similarity::{
    displacement_categories, similarity_layout, DisplacementSummary, SimilarityLayout, SkippedWord,
    DEFAULT_DISPLACEMENT_EPSILON, SECTOR_COUNT,
};
use crate::store::sentences_for;

/// An explanation config together with the concepts it references.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedExplanation {
    pub config: ExplanationConfig,
    pub concept: ConceptSpec,
    pub anchor: Option<ConceptSpec>,
    pub second: Option<ConceptSpec>,
}

impl ResolvedExplanation {
    /// Validates `config` and looks up every concept it names.
    pub fn resolve(config: ExplanationConfig, mut lookup: impl FnMut(&str) -> Option<ConceptSpec>) -> Result<Self> {
        config.validate()?;
        let mut find = |name: &str| lookup(name).ok_or_else(|| Error::Config(format!("unknown concept `{name}`")));
        let concept = find(&config.concept)?;
        let anchor = config.anchor_concept.as_deref().map(&mut find).transpose()?;
        let second = config.second_concept.as_deref().map(&mut find).transpose()?;
        Ok(ResolvedExplanation { config, concept, anchor, second })
    }

    /// Concepts whose words are plotted.
    pub fn plotted_concepts(&self) -> Vec<&ConceptSpec> {
        std::iter::once(&self.concept).chain(self.second.as_ref()).collect()
    }

    /// Words listed in more than one pole across all referenced concepts.
    pub fn overlapping_words(&self) -> Vec<String> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let concepts = std::iter::once(&self.concept).chain(self.anchor.as_ref()).chain(self.second.as_ref());
        for concept in concepts {
            for pole in concept.poles() {
                for key in pole.keys() {
                    *seen.entry(key).or_default() += 1;
                }
            }
        }
        seen.into_iter().filter(|&(_, n)| n > 1).map(|(w, _)| w).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SingleLayout {
    Similarity(SimilarityLayout),
    Projection(ProjectionLayout),
    Prediction(PredictionLayout),
}

impl SingleLayout {
    /// Coordinates with the pole index used for scoring and contours.
    pub fn points(&self) -> Vec<(String, [f64; 2], usize)> {
        match self {
            SingleLayout::Similarity(l) => l.points.iter().map(|p| (p.word.clone(), [p.x, p.y], p.pole_index)).collect(),
            SingleLayout::Projection(l) => l.points.iter().map(|p| (p.word.clone(), [p.x, p.y], p.primary_pole())).collect(),
            SingleLayout::Prediction(l) => l.points.iter().map(|p| (p.word.clone(), [p.x, p.y], p.pole_index)).collect(),
        }
    }

    pub fn skipped(&self) -> &[SkippedWord] {
        match self {
            SingleLayout::Similarity(l) => &l.skipped,
            SingleLayout::Projection(l) => &l.skipped,
            SingleLayout::Prediction(l) => &l.skipped,
        }
    }

    /// Distance consistency of the layout by primary pole.
    pub fn dsc(&self) -> Result<f64> {
        let (coords, labels): (Vec<[f64; 2]>, Vec<usize>) = self.points().into_iter().map(|(_, c, l)| (c, l)).unzip();
        dsc(&coords, &labels)
    }

    /// Point clouds per pole. Projection words tagged with several poles
    /// appear in each of them. Empty poles are left out.
    fn clouds(&self, pole_labels: &[String]) -> Vec<(String, Vec<[f64; 2]>)> {
        let mut clouds: Vec<Vec<[f64; 2]>> = vec![Vec::new(); pole_labels.len()];
        match self {
            SingleLayout::Projection(l) => {
                for p in &l.points {
                    for &pole in &p.poles {
                        clouds[pole].push([p.x, p.y]);
                    }
                }
            }
            _ => {
                for (_, xy, pole) in self.points() {
                    clouds[pole].push(xy);
                }
            }
        }
        pole_labels.iter().cloned().zip(clouds).filter(|(_, pts)| !pts.is_empty()).collect()
    }
}

fn pole_labels(resolved: &ResolvedExplanation) -> Vec<String> {
    let concepts = match resolved.config.explanation_type {
        ExplanationType::EmbProjection => resolved.plotted_concepts(),
        _ => vec![&resolved.concept],
    };
    concepts.iter().flat_map(|c| c.poles().iter().map(|p| p.label.clone())).collect()
}

/// Layout of one model at one layer. `method` overrides the configured
/// projection method.
pub fn layout_with_method(
    resolved: &ResolvedExplanation,
    store: &ModelStore,
    layer: u32,
    method: Option<ProjectionMethod>,
    cancel: Option<&AtomicBool>,
) -> Result<SingleLayout> {
    let cfg = &resolved.config;
    match cfg.explanation_type {
        ExplanationType::EmbSimilarity => {
            let anchor = resolved.anchor.as_ref().ok_or_else(|| Error::Config("EmbSimilarity requires an anchor concept".into()))?;
            Ok(SingleLayout::Similarity(similarity_layout(&resolved.concept, anchor, store, cfg.kind, layer)?))
        }
        ExplanationType::EmbProjection => {
            let method = method
                .or(cfg.projection_method)
                .ok_or_else(|| Error::Config("EmbProjection requires projection_method".into()))?;
            let request = ProjectionRequest { method, kind: cfg.kind, layer, params: &cfg.params.projection, cancel };
            Ok(SingleLayout::Projection(projection_layout(&resolved.plotted_concepts(), store, request)?))
        }
        ExplanationType::PredSimilarity => Ok(SingleLayout::Prediction(prediction_layout(&resolved.concept, store)?)),
    }
}

pub fn compute_layout(resolved: &ResolvedExplanation, store: &ModelStore, layer: u32, cancel: Option<&AtomicBool>) -> Result<SingleLayout> {
    layout_with_method(resolved, store, layer, None, cancel)
}

/// Choices made where the method leaves room, shipped with every payload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decisions {
    pub sector_count: usize,
    pub sector_zero: &'static str,
    pub displacement_epsilon: f64,
    pub prediction_delta_epsilon: f64,
    pub dsc_variant: &'static str,
    pub glyph_projection: &'static str,
    pub bandwidth: f64,
    pub bandwidth_units: &'static str,
    pub grid_size: usize,
    pub contour_levels: &'static str,
    pub contour_frame: &'static str,
    pub knn_space: &'static str,
    pub k: usize,
    pub comparison_neighbors: &'static str,
    pub anchor_self_exclusion: bool,
    pub prediction_x: &'static str,
    pub prediction_y: &'static str,
    pub projection_input: &'static str,
}

impl Decisions {
    pub fn for_config(config: &ExplanationConfig) -> Self {
        Decisions {
            sector_count: SECTOR_COUNT,
            sector_zero: "centered on +x (more similar to anchor pole 2)",
            displacement_epsilon: DEFAULT_DISPLACEMENT_EPSILON,
            prediction_delta_epsilon: DEFAULT_DELTA_EPSILON,
            dsc_variant: DSC_VARIANT,
            glyph_projection: "pca",
            bandwidth: config.params.contour.bandwidth,
            bandwidth_units: "grid cells",
            grid_size: config.params.contour.grid_size,
            contour_levels: "equally spaced: j/(n_levels+1) * max density",
            contour_frame: "shared across poles and compared models",
            knn_space: "2-D projected coordinates",
            k: config.params.projection.k,
            comparison_neighbors: "recomputed within the shared word set",
            anchor_self_exclusion: true,
            prediction_x: "1 - share of class-0 sentences",
            prediction_y: "index within pole / (pole length - 1)",
            projection_input: if config.params.projection.normalize { "unit-normalized vectors" } else { "raw vectors" },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationPayload {
    pub explanation_id: String,
    pub model_id: String,
    pub explanation_type: ExplanationType,
    pub kind: EmbeddingKind,
    pub layer: u32,
    pub layout: SingleLayout,
    pub contours: Vec<ContourSet>,
    /// Guidance score at this layer, absent when it cannot be computed.
    pub glyph_score: Option<f64>,
    pub overlapping_words: Vec<String>,
    pub decisions: Decisions,
}

fn contours_in(layout: &SingleLayout, labels: &[String], config: &ExplanationConfig, frame: Option<GridFrame>) -> Result<Vec<ContourSet>> {
    let clouds = layout.clouds(labels);
    if clouds.is_empty() {
        return Ok(Vec::new());
    }
    contour_summary(&clouds, &config.params.contour, frame)
}

pub fn single_payload(
    explanation_id: &str,
    resolved: &ResolvedExplanation,
    store: &ModelStore,
    layer: u32,
    cancel: Option<&AtomicBool>,
) -> Result<ExplanationPayload> {
    let cfg = &resolved.config;
    cfg.check_layer(layer, store.layers())?;
    let layout = compute_layout(resolved, store, layer, cancel)?;
    let contours = contours_in(&layout, &pole_labels(resolved), cfg, None)?;
    let glyph_score = match (&layout, cfg.projection_method) {
        (SingleLayout::Projection(_), Some(m)) if m != ProjectionMethod::Pca => {
            layout_with_method(resolved, store, layer, Some(ProjectionMethod::Pca), None).and_then(|l| l.dsc()).ok()
        }
        _ => layout.dsc().ok(),
    };
    Ok(ExplanationPayload {
        explanation_id: explanation_id.to_string(),
        model_id: store.model_id().to_string(),
        explanation_type: cfg.explanation_type,
        kind: cfg.kind,
        layer,
        layout,
        contours,
        glyph_score,
        overlapping_words: resolved.overlapping_words(),
        decisions: Decisions::for_config(cfg),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Endpoint {
    pub model_id: String,
    pub layer: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ComparisonDetail {
    /// Both layouts share one frame; the source is drawn as contours and
    /// the target as filled areas.
    Superposition {
        frame: Option<GridFrame>,
        #[serde(skip_serializing_if = "Option::is_none")]
        displacement: Option<DisplacementSummary>,
        #[serde(skip_serializing_if = "Option::is_none")]
        prediction_deltas: Option<PredictionDeltas>,
    },
    /// Side-by-side projections plus neighborhood-overlap annotations.
    ExplicitEncoding {
        coordinates_from: CoordinateSource,
        k: usize,
        annotations: Vec<OverlapAnnotation>,
        categories: Vec<NeighborhoodCategory>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonPayload {
    pub explanation_id: String,
    pub explanation_type: ExplanationType,
    pub kind: EmbeddingKind,
    pub source: Endpoint,
    pub target: Endpoint,
    pub source_layout: SingleLayout,
    pub target_layout: SingleLayout,
    pub source_contours: Vec<ContourSet>,
    pub target_contours: Vec<ContourSet>,
    pub comparison: ComparisonDetail,
    pub overlapping_words: Vec<String>,
    pub decisions: Decisions,
}

pub fn comparison_payload(
    explanation_id: &str,
    resolved: &ResolvedExplanation,
    source: (&ModelStore, u32),
    target: (&ModelStore, u32),
    cancel: Option<&AtomicBool>,
) -> Result<ComparisonPayload> {
    let cfg = &resolved.config;
    let (src_store, src_layer) = source;
    let (tgt_store, tgt_layer) = target;
    cfg.check_layer(src_layer, src_store.layers())?;
    cfg.check_layer(tgt_layer, tgt_store.layers())?;
    let src = compute_layout(resolved, src_store, src_layer, cancel)?;
    let tgt = compute_layout(resolved, tgt_store, tgt_layer, cancel)?;
    let labels = pole_labels(resolved);

    let (source_contours, target_contours, comparison) = match (&src, &tgt) {
        (SingleLayout::Projection(s), SingleLayout::Projection(t)) => {
            let annotations = overlap_annotations(s, t, cfg.params.projection.k);
            let detail = ComparisonDetail::ExplicitEncoding {
                coordinates_from: CoordinateSource::Source,
                k: annotations.first().map_or(0, |a| a.k),
                categories: neighborhood_categories(&annotations),
                annotations,
            };
            (contours_in(&src, &labels, cfg, None)?, contours_in(&tgt, &labels, cfg, None)?, detail)
        }
        _ => {
            let src_clouds = src.clouds(&labels);
            let tgt_clouds = tgt.clouds(&labels);
            let frame = shared_frame(src_clouds.iter().chain(&tgt_clouds).map(|(_, p)| p.as_slice()), &cfg.params.contour);
            let (displacement, deltas) = match (&src, &tgt) {
                (SingleLayout::Similarity(s), SingleLayout::Similarity(t)) => {
                    (Some(displacement_categories(&s.points, &t.points, DEFAULT_DISPLACEMENT_EPSILON)), None)
                }
                (SingleLayout::Prediction(s), SingleLayout::Prediction(t)) => {
                    (None, Some(prediction_deltas(&s.points, &t.points, DEFAULT_DELTA_EPSILON)))
                }
                _ => unreachable!("both sides come from the same explanation type"),
            };
            (
                contours_in(&src, &labels, cfg, frame)?,
                contours_in(&tgt, &labels, cfg, frame)?,
                ComparisonDetail::Superposition { frame, displacement, prediction_deltas: deltas },
            )
        }
    };

    Ok(ComparisonPayload {
        explanation_id: explanation_id.to_string(),
        explanation_type: cfg.explanation_type,
        kind: cfg.kind,
        source: Endpoint { model_id: src_store.model_id().to_string(), layer: src_layer },
        target: Endpoint { model_id: tgt_store.model_id().to_string(), layer: tgt_layer },
        source_layout: src,
        target_layout: tgt,
        source_contours,
        target_contours,
        comparison,
        overlapping_words: resolved.overlapping_words(),
        decisions: Decisions::for_config(cfg),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextEntry {
    pub sentence_id: String,
    pub text: String,
    /// Character offsets `[start, end)` of the first match of the word.
    pub offsets: Option<[usize; 2]>,
    pub label: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictionEntry {
    pub sentence_id: String,
    pub label: i64,
    pub label_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordDetails {
    pub model_id: String,
    pub word: String,
    pub prediction_labels: Option<Vec<String>>,
    pub contexts: Vec<ContextEntry>,
    pub predictions: Vec<PredictionEntry>,
}

fn chars_match(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Character offsets of the first case-insensitive occurrence of `word` in
/// `text`, preferring whole-word matches.
pub fn find_word(text: &str, word: &str) -> Option<[usize; 2]> {
    let t: Vec<char> = text.chars().collect();
    let w: Vec<char> = word.trim().chars().collect();
    if w.is_empty() || w.len() > t.len() {
        return None;
    }
    let hits: Vec<usize> = (0..=t.len() - w.len())
        .filter(|&s| w.iter().enumerate().all(|(i, &c)| chars_match(t[s + i], c)))
        .collect();
    let boundary = |s: usize| {
        let before = s == 0 || !t[s - 1].is_alphanumeric();
        let after = s + w.len() == t.len() || !t[s + w.len()].is_alphanumeric();
        before && after
    };
    let start = hits.iter().copied().find(|&s| boundary(s)).or(hits.first().copied())?;
    Some([start, start + w.len()])
}

/// Sentences that use `word` with the match position marked, plus the
/// prediction label of each sentence. Unknown words give empty lists.
pub fn word_details(store: &ModelStore, word: &str) -> WordDetails {
    let labels = store.prediction_labels().map(<[String]>::to_vec);
    let contexts = sentences_for(store, word)
        .into_iter()
        .map(|s| ContextEntry { offsets: find_word(&s.text, word), sentence_id: s.sentence_id, text: s.text, label: s.label })
        .collect();
    let mut predictions: Vec<PredictionEntry> = store
        .predictions_for(word)
        .map(|p| PredictionEntry {
            sentence_id: p.sentence_id.clone(),
            label: p.label,
            label_name: labels.as_ref().and_then(|l| usize::try_from(p.label).ok().and_then(|i| l.get(i).cloned())),
        })
        .collect();
    predictions.sort_by(|a, b| a.sentence_id.cmp(&b.sentence_id));
    WordDetails {
        model_id: store.model_id().to_string(),
        word: normalize_word(word),
        prediction_labels: labels,
        contexts,
        predictions,
    }
}
