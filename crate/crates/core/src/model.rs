//! Shared domain types: concepts, model stores, explanation configurations.
//!
//! Everything here is a plain immutable value once constructed. The only
//! logic is validation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity form of a word: trimmed and lowercased. Display keeps the
/// original casing.
pub fn normalize_word(word: &str) -> String {
    word.trim().to_lowercase()
}

/// A concept file as it appears on disk, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawConcept {
    pub name: String,
    pub poles: Vec<RawPole>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPole {
    pub label: String,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleSpec {
    pub label: String,
    /// Order is meaningful: it drives the y-coordinate of prediction layouts.
    pub words: Vec<String>,
}

impl PoleSpec {
    /// Normalized identity keys, in list order.
    pub fn keys(&self) -> impl Iterator<Item = String> + '_ {
        self.words.iter().map(|w| normalize_word(w))
    }

    pub fn contains(&self, word: &str) -> bool {
        let key = normalize_word(word);
        self.keys().any(|k| k == key)
    }
}

/// A named concept made of exactly two polarity word lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConcept", into = "RawConcept")]
pub struct ConceptSpec {
    name: String,
    poles: [PoleSpec; 2],
}

impl ConceptSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn poles(&self) -> &[PoleSpec; 2] {
        &self.poles
    }

    pub fn pole(&self, index: usize) -> &PoleSpec {
        &self.poles[index]
    }

    /// Parses and validates a concept document.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConcept = serde_json::from_str(text).map_err(|e| Error::Parse {
            file: "<concept>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        validate_concept(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawConcept::from(self.clone()))
            .expect("concept serialization is infallible")
    }

    /// Normalized words present in both this concept and `other`.
    pub fn shared_words(&self, other: &ConceptSpec) -> Vec<String> {
        let mine: HashSet<String> = self.poles.iter().flat_map(|p| p.keys()).collect();
        let mut shared: Vec<String> = other
            .poles
            .iter()
            .flat_map(|p| p.keys())
            .filter(|k| mine.contains(k))
            .collect();
        shared.sort();
        shared.dedup();
        shared
    }
}

impl TryFrom<RawConcept> for ConceptSpec {
    type Error = Error;

    fn try_from(raw: RawConcept) -> Result<Self> {
        validate_concept(raw)
    }
}

impl From<ConceptSpec> for RawConcept {
    fn from(spec: ConceptSpec) -> Self {
        RawConcept {
            name: spec.name,
            poles: spec
                .poles
                .into_iter()
                .map(|p| RawPole { label: p.label, words: p.words })
                .collect(),
        }
    }
}

/// Checks a parsed concept document against the concept invariants.
pub fn validate_concept(raw: RawConcept) -> Result<ConceptSpec> {
    let name = raw.name.trim().to_string();
    if name.is_empty() {
        return Err(Error::EmptyLabel { concept: raw.name, field: "name".into() });
    }
    if raw.poles.len() != 2 {
        return Err(Error::MissingPole { concept: name, found: raw.poles.len() });
    }

    let mut poles = Vec::with_capacity(2);
    for (i, pole) in raw.poles.into_iter().enumerate() {
        let label = pole.label.trim().to_string();
        if label.is_empty() {
            return Err(Error::EmptyLabel { concept: name, field: format!("poles[{i}].label") });
        }
        let mut seen = HashSet::new();
        let mut words = Vec::with_capacity(pole.words.len());
        for (j, word) in pole.words.into_iter().enumerate() {
            let display = word.trim().to_string();
            if display.is_empty() {
                return Err(Error::EmptyLabel {
                    concept: name,
                    field: format!("poles[{i}].words[{j}]"),
                });
            }
            if !seen.insert(normalize_word(&display)) {
                return Err(Error::DuplicateWord { concept: name, pole: label, word: display });
            }
            words.push(display);
        }
        if words.len() < 2 {
            return Err(Error::TooFewWords { concept: name, pole: label, found: words.len() });
        }
        poles.push(PoleSpec { label, words });
    }
    if normalize_word(&poles[0].label) == normalize_word(&poles[1].label) {
        return Err(Error::EmptyLabel {
            concept: name,
            field: "poles[1].label (must differ from poles[0].label)".into(),
        });
    }

    let [first, second]: [PoleSpec; 2] = poles.try_into().expect("exactly two poles checked above");
    Ok(ConceptSpec { name, poles: [first, second] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmbeddingKind {
    #[serde(rename = "context0")]
    Context0,
    #[serde(rename = "contextual")]
    Contextualized,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 2] = [EmbeddingKind::Context0, EmbeddingKind::Contextualized];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Context0 => "context0",
            EmbeddingKind::Contextualized => "contextual",
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One aggregated word embedding at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVector {
    pub word: String,
    pub kind: EmbeddingKind,
    pub layer: u32,
    pub vector: Vec<f32>,
    pub occurrence_count: u32,
}

impl WordVector {
    pub fn to_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub word: String,
    pub sentence_id: String,
    pub label: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sentence_id: String,
    pub text: String,
}

pub(crate) type VectorKey = (String, EmbeddingKind, u32);

/// Immutable per-model collection of embeddings, predictions and sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStore {
    model_id: String,
    base_model: String,
    dim: usize,
    layers: u32,
    vectors: HashMap<VectorKey, WordVector>,
    predictions: Vec<PredictionRecord>,
    sentences: BTreeMap<String, Sentence>,
    prediction_labels: Option<Vec<String>>,
    // word key -> sentence ids, sorted
    word_sentences: HashMap<String, Vec<String>>,
    // (word key, sentence id) -> label
    prediction_index: HashMap<(String, String), i64>,
    // word key -> record indices
    word_predictions: HashMap<String, Vec<usize>>,
}

impl ModelStore {
    pub fn builder(model_id: impl Into<String>, base_model: impl Into<String>, dim: usize, layers: u32) -> StoreBuilder {
        StoreBuilder {
            model_id: model_id.into(),
            base_model: base_model.into(),
            dim,
            layers,
            vectors: HashMap::new(),
            predictions: Vec::new(),
            sentences: BTreeMap::new(),
            sentence_words: Vec::new(),
            prediction_labels: None,
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn base_model(&self) -> &str {
        &self.base_model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.len()
    }

    /// All stored vectors, in no particular order.
    pub fn vectors(&self) -> impl Iterator<Item = &WordVector> {
        self.vectors.values()
    }

    pub fn get(&self, word: &str, kind: EmbeddingKind, layer: u32) -> Option<&WordVector> {
        self.vectors.get(&(normalize_word(word), kind, layer))
    }

    pub fn predictions(&self) -> &[PredictionRecord] {
        &self.predictions
    }

    pub fn has_predictions(&self) -> bool {
        !self.predictions.is_empty()
    }

    pub fn prediction_labels(&self) -> Option<&[String]> {
        self.prediction_labels.as_deref()
    }

    pub fn sentences(&self) -> &BTreeMap<String, Sentence> {
        &self.sentences
    }

    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    pub(crate) fn sentence_ids_for(&self, word: &str) -> &[String] {
        self.word_sentences.get(&normalize_word(word)).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn label_for(&self, word: &str, sentence_id: &str) -> Option<i64> {
        self.prediction_index
            .get(&(normalize_word(word), sentence_id.to_string()))
            .copied()
    }

    /// Prediction records attached to `word`, in stored order.
    pub fn predictions_for(&self, word: &str) -> impl Iterator<Item = &PredictionRecord> {
        self.word_predictions
            .get(&normalize_word(word))
            .into_iter()
            .flatten()
            .map(|&i| &self.predictions[i])
    }

    /// Whether any vector of `kind` exists at `layer`.
    pub fn has_layer(&self, kind: EmbeddingKind, layer: u32) -> bool {
        self.vectors.keys().any(|(_, k, l)| *k == kind && *l == layer)
    }
}

/// Mutable staging area for a [`ModelStore`].
#[derive(Debug)]
pub struct StoreBuilder {
    model_id: String,
    base_model: String,
    dim: usize,
    layers: u32,
    vectors: HashMap<VectorKey, WordVector>,
    predictions: Vec<PredictionRecord>,
    sentences: BTreeMap<String, Sentence>,
    sentence_words: Vec<(String, String)>,
    prediction_labels: Option<Vec<String>>,
}

impl StoreBuilder {
    /// Inserts or replaces the vector for `(word, kind, layer)`.
    pub fn vector(&mut self, v: WordVector) -> &mut Self {
        self.vectors.insert((normalize_word(&v.word), v.kind, v.layer), v);
        self
    }

    pub fn prediction(&mut self, record: PredictionRecord) -> &mut Self {
        self.predictions.push(record);
        self
    }

    /// Registers a sentence for `word`. The same sentence may be registered
    /// for several words; the first text seen wins.
    pub fn sentence(&mut self, sentence_id: impl Into<String>, word: impl Into<String>, text: impl Into<String>) -> &mut Self {
        let sentence_id = sentence_id.into();
        self.sentence_words.push((normalize_word(&word.into()), sentence_id.clone()));
        self.sentences
            .entry(sentence_id.clone())
            .or_insert_with(|| Sentence { sentence_id, text: text.into() });
        self
    }

    pub fn prediction_labels(&mut self, labels: Option<Vec<String>>) -> &mut Self {
        self.prediction_labels = labels;
        self
    }

    pub fn build(self) -> ModelStore {
        let mut word_sentences: HashMap<String, Vec<String>> = HashMap::new();
        for (word, id) in self.sentence_words {
            word_sentences.entry(word).or_default().push(id);
        }
        for ids in word_sentences.values_mut() {
            ids.sort();
            ids.dedup();
        }
        let mut prediction_index = HashMap::new();
        let mut word_predictions: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, p) in self.predictions.iter().enumerate() {
            let key = normalize_word(&p.word);
            prediction_index.insert((key.clone(), p.sentence_id.clone()), p.label);
            word_predictions.entry(key).or_default().push(i);
        }
        ModelStore {
            model_id: self.model_id,
            base_model: self.base_model,
            dim: self.dim,
            layers: self.layers,
            vectors: self.vectors,
            predictions: self.predictions,
            sentences: self.sentences,
            prediction_labels: self.prediction_labels,
            word_sentences,
            prediction_index,
            word_predictions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DimensionMismatch { word: String, kind: EmbeddingKind, layer: u32, expected: usize, found: usize },
    NonFiniteVector { word: String, kind: EmbeddingKind, layer: u32 },
    LayerOutOfRange { word: String, kind: EmbeddingKind, layer: u32, layers: u32 },
    ZeroOccurrences { word: String, kind: EmbeddingKind, layer: u32 },
    DanglingSentenceRef { word: String, sentence_id: String },
    LabelOutOfRange { word: String, sentence_id: String, label: i64 },
    MissingPredictionLabels { found: usize },
    InvalidManifest { message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { word, kind, layer, expected, found } => {
                write!(f, "DimensionMismatch: `{word}` ({kind}, layer {layer}) has length {found}, expected {expected}")
            }
            Violation::NonFiniteVector { word, kind, layer } => {
                write!(f, "NonFiniteVector: `{word}` ({kind}, layer {layer})")
            }
            Violation::LayerOutOfRange { word, kind, layer, layers } => {
                write!(f, "LayerOutOfRange: `{word}` ({kind}) layer {layer} not in 1..={layers}")
            }
            Violation::ZeroOccurrences { word, kind, layer } => {
                write!(f, "ZeroOccurrences: `{word}` ({kind}, layer {layer})")
            }
            Violation::DanglingSentenceRef { word, sentence_id } => {
                write!(f, "DanglingSentenceRef: prediction for `{word}` references unknown sentence `{sentence_id}`")
            }
            Violation::LabelOutOfRange { word, sentence_id, label } => {
                write!(f, "LabelOutOfRange: prediction for `{word}` in `{sentence_id}` has label {label}")
            }
            Violation::MissingPredictionLabels { found } => {
                write!(f, "MissingPredictionLabels: predictions present but {found} class names declared (need 2)")
            }
            Violation::InvalidManifest { message } => write!(f, "InvalidManifest: {message}"),
        }
    }
}

/// Every invariant violation found in a store.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

/// Checks every store invariant and reports all violations at once.
pub fn validate_store(store: &ModelStore) -> std::result::Result<(), ValidationReport> {
    let mut report = ValidationReport::default();

    if store.dim == 0 || store.layers == 0 {
        report.violations.push(Violation::InvalidManifest {
            message: format!("d = {} and L = {} must both be at least 1", store.dim, store.layers),
        });
    }

    // Sorted so the report is deterministic.
    let mut keys: Vec<&VectorKey> = store.vectors.keys().collect();
    keys.sort();
    for key in keys {
        let v = &store.vectors[key];
        if v.vector.len() != store.dim {
            report.violations.push(Violation::DimensionMismatch {
                word: v.word.clone(),
                kind: v.kind,
                layer: v.layer,
                expected: store.dim,
                found: v.vector.len(),
            });
        }
        if v.vector.iter().any(|x| !x.is_finite()) {
            report.violations.push(Violation::NonFiniteVector { word: v.word.clone(), kind: v.kind, layer: v.layer });
        }
        if v.layer == 0 || v.layer > store.layers {
            report.violations.push(Violation::LayerOutOfRange {
                word: v.word.clone(),
                kind: v.kind,
                layer: v.layer,
                layers: store.layers,
            });
        }
        if v.occurrence_count == 0 {
            report.violations.push(Violation::ZeroOccurrences { word: v.word.clone(), kind: v.kind, layer: v.layer });
        }
    }

    if !store.predictions.is_empty() {
        let n_labels = store.prediction_labels.as_ref().map_or(0, Vec::len);
        if n_labels != 2 {
            report.violations.push(Violation::MissingPredictionLabels { found: n_labels });
        }
    }
    for p in &store.predictions {
        if !store.sentences.contains_key(&p.sentence_id) {
            report.violations.push(Violation::DanglingSentenceRef {
                word: p.word.clone(),
                sentence_id: p.sentence_id.clone(),
            });
        }
        if !(0..=1).contains(&p.label) {
            report.violations.push(Violation::LabelOutOfRange {
                word: p.word.clone(),
                sentence_id: p.sentence_id.clone(),
                label: p.label,
            });
        }
    }

    if report.is_ok() {
        Ok(())
    } else {
        Err(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationType {
    EmbSimilarity,
    EmbProjection,
    PredSimilarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Mds,
    Tsne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourParams {
    /// Kernel bandwidth in grid cells.
    pub bandwidth: f64,
    pub n_levels: usize,
    pub grid_size: usize,
}

impl Default for ContourParams {
    fn default() -> Self {
        ContourParams { bandwidth: 5.0, n_levels: 4, grid_size: 256 }
    }
}

impl ContourParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if !(1..=16).contains(&self.n_levels) {
            return Err(Error::Config(format!("n_levels must be in 1..=16, got {}", self.n_levels)));
        }
        if self.grid_size < 2 {
            return Err(Error::Config(format!("grid_size must be at least 2, got {}", self.grid_size)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionParams {
    /// Neighbor count for the 2-D neighbor lists.
    pub k: usize,
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Unit-normalize vectors before projecting.
    pub normalize: bool,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams { k: 10, perplexity: 30.0, seed: 0, iterations: 1000, normalize: false }
    }
}

impl ProjectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.perplexity.is_finite() && self.perplexity >= 2.0) {
            return Err(Error::Config(format!("perplexity must be >= 2, got {}", self.perplexity)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Perplexity clamped to what `n` points can support.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n.saturating_sub(1)) as f64 / 3.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplanationParams {
    pub contour: ContourParams,
    pub projection: ProjectionParams,
}

/// A user-composed explanation: which view, over which concepts, at which
/// layer and embedding kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationConfig {
    pub explanation_type: ExplanationType,
    pub concept: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_concept: Option<String>,
    #[serde(default = "default_kind")]
    pub kind: EmbeddingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_method: Option<ProjectionMethod>,
    pub layer: u32,
    #[serde(default)]
    pub params: ExplanationParams,
}

fn default_kind() -> EmbeddingKind {
    EmbeddingKind::Contextualized
}

impl ExplanationConfig {
    pub fn similarity(concept: &str, anchor: &str, kind: EmbeddingKind, layer: u32) -> Self {
        ExplanationConfig {
            explanation_type: ExplanationType::EmbSimilarity,
            concept: concept.into(),
            anchor_concept: Some(anchor.into()),
            second_concept: None,
            kind,
            projection_method: None,
            layer,
            params: ExplanationParams::default(),
        }
    }

    pub fn projection(concept: &str, method: ProjectionMethod, kind: EmbeddingKind, layer: u32) -> Self {
        ExplanationConfig {
            explanation_type: ExplanationType::EmbProjection,
            concept: concept.into(),
            anchor_concept: None,
            second_concept: None,
            kind,
            projection_method: Some(method),
            layer,
            params: ExplanationParams::default(),
        }
    }

    pub fn prediction(concept: &str) -> Self {
        ExplanationConfig {
            explanation_type: ExplanationType::PredSimilarity,
            concept: concept.into(),
            anchor_concept: None,
            second_concept: None,
            kind: EmbeddingKind::Contextualized,
            projection_method: None,
            layer: 1,
            params: ExplanationParams::default(),
        }
    }

    /// Checks per-type required fields and parameter ranges. Layer bounds
    /// depend on the model and are checked by [`ExplanationConfig::check_layer`].
    pub fn validate(&self) -> Result<()> {
        self.params.contour.validate()?;
        self.params.projection.validate()?;
        if self.concept.trim().is_empty() {
            return Err(Error::Config("concept is required".into()));
        }
        if self.layer == 0 {
            return Err(Error::Config("layer must be >= 1 (layers are 1-indexed)".into()));
        }
        match self.explanation_type {
            ExplanationType::EmbSimilarity => {
                if self.anchor_concept.is_none() {
                    return Err(Error::Config("EmbSimilarity requires an input of two concepts: anchor_concept is missing".into()));
                }
                if self.second_concept.is_some() || self.projection_method.is_some() {
                    return Err(Error::Config("EmbSimilarity takes no second_concept or projection_method".into()));
                }
            }
            ExplanationType::EmbProjection => {
                if self.projection_method.is_none() {
                    return Err(Error::Config("EmbProjection requires projection_method".into()));
                }
                if self.anchor_concept.is_some() {
                    return Err(Error::Config("EmbProjection takes no anchor_concept".into()));
                }
            }
            ExplanationType::PredSimilarity => {
                if self.anchor_concept.is_some() || self.second_concept.is_some() || self.projection_method.is_some() {
                    return Err(Error::Config("PredSimilarity takes only a concept".into()));
                }
            }
        }
        Ok(())
    }

    pub fn check_layer(&self, layer: u32, layers: u32) -> Result<()> {
        if layer == 0 || layer > layers {
            return Err(Error::Config(format!("layer {layer} outside 1..={layers}")));
        }
        Ok(())
    }

    /// Names of every concept this explanation references, in role order.
    pub fn concept_names(&self) -> Vec<&str> {
        let mut names = vec![self.concept.as_str()];
        names.extend(self.anchor_concept.as_deref());
        names.extend(self.second_concept.as_deref());
        names
    }
}
