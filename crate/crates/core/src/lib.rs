//! Concept-based comparison of language-model embeddings.
//!
//! Load per-model dumps into a [`ModelStore`], describe an explanation with
//! an [`ExplanationConfig`], and compute render-ready layouts: anchor
//! similarity, 2-D projections with neighbor overlap, prediction ratios,
//! density contours, glyph scores and pixel matrices.

pub mod contours;
pub mod error;
pub mod explain;
pub mod model;
pub mod pixel;
pub mod prediction;
pub mod projection;
pub mod quality;
pub mod similarity;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
pub use explain::{
    comparison_payload, compute_layout, single_payload, word_details, ComparisonPayload, ExplanationPayload,
    ResolvedExplanation, SingleLayout,
};
pub use model::{
    normalize_word, validate_concept, validate_store, ConceptSpec, ContourParams, EmbeddingKind, ExplanationConfig,
    ExplanationParams, ExplanationType, ModelStore, PoleSpec, PredictionRecord, ProjectionMethod, ProjectionParams,
    WordVector,
};
pub use store::{aggregate_mean, load_dump, sentences_for, word_vector};
pub use synth::{generate_dump, SynthParams};
