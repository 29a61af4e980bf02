//! Service layer over `conceptlens`: a data directory of ingested model
//! dumps and concepts, content-addressed explanations, a versioned payload
//! cache, background jobs, the HTTP API and the `engine` CLI.

pub mod api;
pub mod cache;
pub mod cli;
pub mod engine;
pub mod error;
pub mod jobs;

pub use engine::{ComposeRequest, Computed, Engine, ExplanationHandle, ModelSummary, PixelRequest, ENGINE_VERSION};
pub use error::{EngineError, Result};
