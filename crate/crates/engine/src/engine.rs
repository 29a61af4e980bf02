//! Engine state: ingested models, concepts, composed explanations, the
//! payload cache and background jobs, all rooted in one data directory.
//!
//! ```text
//! <data-dir>/models/<model_id>/     copied dump files
//! <data-dir>/concepts/<hash>.json   concept files
//! <data-dir>/explanations/<id>.json composed explanation handles
//! <data-dir>/cache/<version>/       cached payloads
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use conceptlens::explain::{comparison_payload, single_payload, word_details, ResolvedExplanation};
use conceptlens::pixel::{pixel_payload, DEFAULT_MIN_CLUSTER_SIZE};
use conceptlens::quality::glyph_series;
use conceptlens::store::{load_dump, EMBEDDINGS_FILE, MANIFEST_FILE, PREDICTIONS_FILE, SENTENCES_FILE};
use conceptlens::{ConceptSpec, EmbeddingKind, ExplanationConfig, ExplanationType, ModelStore, ProjectionMethod};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{cache_key, PayloadCache};
use crate::error::{EngineError, Result};
use crate::jobs::{JobInfo, JobRegistry, JobStatus};

/// Version tag for cache entries.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

const DUMP_FILES: [&str; 4] = [MANIFEST_FILE, EMBEDDINGS_FILE, PREDICTIONS_FILE, SENTENCES_FILE];

#[derive(Debug, Clone)]
struct ModelEntry {
    store: Arc<ModelStore>,
    fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub base_model: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub layers: u32,
    pub has_predictions: bool,
    pub prediction_labels: Option<Vec<String>>,
    pub vector_count: usize,
    pub fingerprint: String,
}

/// A composed explanation. The referenced concepts are snapshotted so the
/// id keeps describing the same content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationHandle {
    pub id: String,
    pub config: ExplanationConfig,
    pub concepts: Vec<ConceptSpec>,
    pub created_at: u64,
}

impl ExplanationHandle {
    pub fn resolve(&self) -> Result<ResolvedExplanation> {
        let lookup = |name: &str| self.concepts.iter().find(|c| c.name() == name).cloned();
        Ok(ResolvedExplanation::resolve(self.config.clone(), lookup)?)
    }
}

/// Body of `POST /api/explanations`: a config, optionally checked against
/// one model.
#[derive(Debug, Clone, Deserialize)]
pub struct ComposeRequest {
    #[serde(flatten)]
    pub config: ExplanationConfig,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PixelRequest {
    pub model: String,
    pub words: Vec<String>,
    #[serde(default = "default_kind")]
    pub kind: EmbeddingKind,
    pub layer: u32,
    #[serde(default)]
    pub cluster: bool,
    #[serde(default)]
    pub min_cluster_size: Option<usize>,
}

fn default_kind() -> EmbeddingKind {
    EmbeddingKind::Contextualized
}

/// A payload, or the job that is computing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Computed {
    Ready(Arc<Vec<u8>>),
    Pending(JobInfo),
}

impl Computed {
    /// The payload bytes; panics on a pending job. For callers that ran
    /// in the foreground.
    pub fn into_ready(self) -> Arc<Vec<u8>> {
        match self {
            Computed::Ready(b) => b,
            Computed::Pending(job) => panic!("job {} still pending", job.id),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PrecomputeReport {
    pub payloads: usize,
    pub failures: Vec<String>,
}

#[derive(Debug)]
pub struct Engine {
    data_dir: PathBuf,
    models: RwLock<BTreeMap<String, ModelEntry>>,
    concepts: RwLock<BTreeMap<String, ConceptSpec>>,
    explanations: RwLock<BTreeMap<String, ExplanationHandle>>,
    cache: PayloadCache,
    jobs: JobRegistry,
}

fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("payload serialization is infallible")
}

fn fingerprint(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in DUMP_FILES {
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(bytes) => {
                h.update(name.as_bytes());
                h.update((bytes.len() as u64).to_le_bytes());
                h.update(&bytes);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(EngineError::io(path, e)),
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn valid_model_id(id: &str) -> bool {
    !id.is_empty() && id != "." && id != ".." && id.chars().all(|c| c.is_alphanumeric() || "-_.".contains(c))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| EngineError::io(path, e))
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "json")).collect())
        .unwrap_or_default();
    files.sort();
    files
}

impl Engine {
    /// Opens (creating if needed) a data directory and loads everything in it.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Engine> {
        let data_dir = data_dir.into();
        for sub in ["models", "concepts", "explanations"] {
            ensure_dir(&data_dir.join(sub))?;
        }
        let engine = Engine {
            cache: PayloadCache::open(data_dir.join("cache"), ENGINE_VERSION)?,
            data_dir,
            models: RwLock::new(BTreeMap::new()),
            concepts: RwLock::new(BTreeMap::new()),
            explanations: RwLock::new(BTreeMap::new()),
            jobs: JobRegistry::default(),
        };

        let mut model_dirs: Vec<PathBuf> = fs::read_dir(engine.data_dir.join("models"))
            .map_err(|e| EngineError::io(engine.data_dir.join("models"), e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        model_dirs.sort();
        for dir in model_dirs {
            match load_dump(&dir) {
                Ok(store) => {
                    let fingerprint = fingerprint(&dir)?;
                    engine.models.write().insert(store.model_id().to_string(), ModelEntry { store: Arc::new(store), fingerprint });
                }
                Err(e) => tracing::warn!("skipping model dump {}: {e}", dir.display()),
            }
        }
        for path in json_files(&engine.data_dir.join("concepts")) {
            match fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| ConceptSpec::from_json(&t).map_err(|e| e.to_string())) {
                Ok(c) => {
                    engine.concepts.write().insert(c.name().to_string(), c);
                }
                Err(e) => tracing::warn!("skipping concept file {}: {e}", path.display()),
            }
        }
        for path in json_files(&engine.data_dir.join("explanations")) {
            let parsed = fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice::<ExplanationHandle>(&b).map_err(|e| e.to_string()));
            match parsed {
                Ok(h) => {
                    engine.explanations.write().insert(h.id.clone(), h);
                }
                Err(e) => tracing::warn!("skipping explanation {}: {e}", path.display()),
            }
        }
        Ok(engine)
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn cache(&self) -> &PayloadCache {
        &self.cache
    }

    fn summary(entry: &ModelEntry) -> ModelSummary {
        let s = &entry.store;
        ModelSummary {
            model_id: s.model_id().to_string(),
            base_model: s.base_model().to_string(),
            d: s.dim(),
            layers: s.layers(),
            has_predictions: s.has_predictions(),
            prediction_labels: s.prediction_labels().map(<[String]>::to_vec),
            vector_count: s.vector_count(),
            fingerprint: entry.fingerprint.clone(),
        }
    }

    pub fn models(&self) -> Vec<ModelSummary> {
        self.models.read().values().map(Self::summary).collect()
    }

    fn entry(&self, model_id: &str) -> Result<ModelEntry> {
        self.models.read().get(model_id).cloned().ok_or_else(|| EngineError::UnknownModel(model_id.to_string()))
    }

    pub fn model(&self, model_id: &str) -> Result<Arc<ModelStore>> {
        Ok(self.entry(model_id)?.store)
    }

    /// Validates a dump, copies it into the data directory and registers
    /// the model, replacing any model with the same id.
    pub fn ingest(&self, dump_dir: &Path) -> Result<ModelSummary> {
        let store = load_dump(dump_dir)?;
        let id = store.model_id().to_string();
        if !valid_model_id(&id) {
            return Err(EngineError::BadRequest(format!("model_id `{id}` is not usable as a directory name")));
        }
        let dest = self.data_dir.join("models").join(&id);
        let same = match (dump_dir.canonicalize(), dest.canonicalize()) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if !same {
            if dest.exists() {
                fs::remove_dir_all(&dest).map_err(|e| EngineError::io(&dest, e))?;
            }
            ensure_dir(&dest)?;
            for name in DUMP_FILES {
                let src = dump_dir.join(name);
                if src.exists() {
                    fs::copy(&src, dest.join(name)).map_err(|e| EngineError::io(&src, e))?;
                }
            }
        }
        let entry = ModelEntry { store: Arc::new(store), fingerprint: fingerprint(&dest)? };
        let summary = Self::summary(&entry);
        self.models.write().insert(id, entry);
        Ok(summary)
    }

    pub fn concepts(&self) -> Vec<ConceptSpec> {
        self.concepts.read().values().cloned().collect()
    }

    pub fn concept(&self, name: &str) -> Option<ConceptSpec> {
        self.concepts.read().get(name).cloned()
    }

    /// Validates and stores a concept file, replacing one with the same name.
    pub fn add_concept(&self, text: &str) -> Result<ConceptSpec> {
        let concept = ConceptSpec::from_json(text)?;
        let path = self.data_dir.join("concepts").join(format!("{}.json", &hash_hex(concept.name().as_bytes())[..16]));
        fs::write(&path, concept.to_json()).map_err(|e| EngineError::io(&path, e))?;
        self.concepts.write().insert(concept.name().to_string(), concept.clone());
        Ok(concept)
    }

    /// Content id: a hash over the canonical config and the contents of
    /// every concept it references.
    pub fn explanation_id(config: &ExplanationConfig, concepts: &[ConceptSpec]) -> String {
        let canonical = serde_json::json!({ "config": config, "concepts": concepts });
        hash_hex(canonical.to_string().as_bytes())
    }

    /// Registers an explanation. Returns the handle and whether it is new;
    /// composing the same config twice yields the same handle.
    pub fn compose(&self, request: ComposeRequest) -> Result<(ExplanationHandle, bool)> {
        let ComposeRequest { config, model } = request;
        let resolved = ResolvedExplanation::resolve(config.clone(), |n| self.concept(n))?;
        if config.explanation_type == ExplanationType::PredSimilarity {
            let models = self.models.read();
            match model {
                Some(m) => {
                    let entry = models.get(&m).ok_or_else(|| EngineError::UnknownModel(m.clone()))?;
                    if !entry.store.has_predictions() {
                        return Err(conceptlens::Error::ModelHasNoHead(m).into());
                    }
                }
                None => {
                    if !models.values().any(|e| e.store.has_predictions()) {
                        let names: Vec<&str> = models.keys().map(String::as_str).collect();
                        let who = if names.is_empty() { "(none loaded)".to_string() } else { names.join(", ") };
                        return Err(conceptlens::Error::ModelHasNoHead(who).into());
                    }
                }
            }
        } else if let Some(m) = &model {
            let store = self.model(m)?;
            config.check_layer(config.layer, store.layers())?;
        }

        let mut concepts = vec![resolved.concept.clone()];
        concepts.extend(resolved.anchor.clone());
        concepts.extend(resolved.second.clone());
        let id = Self::explanation_id(&config, &concepts);
        if let Some(existing) = self.explanations.read().get(&id) {
            return Ok((existing.clone(), false));
        }
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let handle = ExplanationHandle { id: id.clone(), config, concepts, created_at };
        let path = self.data_dir.join("explanations").join(format!("{id}.json"));
        fs::write(&path, to_bytes(&handle)).map_err(|e| EngineError::io(&path, e))?;
        let mut all = self.explanations.write();
        let handle = all.entry(id).or_insert(handle).clone();
        Ok((handle, true))
    }

    pub fn explanation(&self, id: &str) -> Result<ExplanationHandle> {
        self.explanations.read().get(id).cloned().ok_or_else(|| EngineError::UnknownExplanation(id.to_string()))
    }

    pub fn explanations(&self) -> Vec<ExplanationHandle> {
        self.explanations.read().values().cloned().collect()
    }

    fn run_cached(
        self: &Arc<Self>,
        key: String,
        kind: &str,
        background: bool,
        work: impl FnOnce(Option<&AtomicBool>) -> Result<Vec<u8>> + Send + 'static,
    ) -> Result<Computed> {
        if let Some(hit) = self.cache.get(&key) {
            return Ok(Computed::Ready(hit));
        }
        if !background {
            let bytes = work(None)?;
            return Ok(Computed::Ready(self.cache.insert(&key, bytes)?));
        }
        if let Some(cancel) = self.jobs.start(&key, kind) {
            let engine = Arc::clone(self);
            let id = key.clone();
            std::thread::spawn(move || {
                let outcome = match work(Some(&cancel)).and_then(|bytes| engine.cache.insert(&id, bytes)) {
                    Ok(_) => Ok(()),
                    Err(EngineError::Core(conceptlens::Error::Cancelled)) => Err((JobStatus::Cancelled, "cancelled".into())),
                    Err(e) => Err((JobStatus::Failed, e.to_string())),
                };
                engine.jobs.finish(&id, outcome);
            });
        }
        // A job that finished between the cache check and here has stored
        // its payload already.
        if let Some(hit) = self.cache.get(&key) {
            return Ok(Computed::Ready(hit));
        }
        let info = self.jobs.get(&key).ok_or_else(|| EngineError::UnknownJob(key.clone()))?;
        Ok(Computed::Pending(info))
    }

    fn is_slow(handle: &ExplanationHandle) -> bool {
        handle.config.projection_method == Some(ProjectionMethod::Tsne)
    }

    /// Single-model payload. With `background`, t-SNE explanations run as
    /// a job and return [`Computed::Pending`] until done.
    pub fn single(self: &Arc<Self>, id: &str, model: &str, layer: Option<u32>, background: bool) -> Result<Computed> {
        let handle = self.explanation(id)?;
        let entry = self.entry(model)?;
        let layer = layer.unwrap_or(handle.config.layer);
        handle.config.check_layer(layer, entry.store.layers())?;
        let key = cache_key(&["single", ENGINE_VERSION, id, model, &entry.fingerprint, &layer.to_string()]);
        let background = background && Self::is_slow(&handle);
        let resolved = handle.resolve()?;
        let id = id.to_string();
        self.run_cached(key, "single", background, move |cancel| {
            Ok(to_bytes(&single_payload(&id, &resolved, &entry.store, layer, cancel)?))
        })
    }

    pub fn compare(
        self: &Arc<Self>,
        id: &str,
        source: (&str, u32),
        target: (&str, u32),
        background: bool,
    ) -> Result<Computed> {
        let handle = self.explanation(id)?;
        let src = self.entry(source.0)?;
        let tgt = self.entry(target.0)?;
        handle.config.check_layer(source.1, src.store.layers())?;
        handle.config.check_layer(target.1, tgt.store.layers())?;
        let key = cache_key(&[
            "compare",
            ENGINE_VERSION,
            id,
            source.0,
            &src.fingerprint,
            &source.1.to_string(),
            target.0,
            &tgt.fingerprint,
            &target.1.to_string(),
        ]);
        let background = background && Self::is_slow(&handle);
        let resolved = handle.resolve()?;
        let id = id.to_string();
        let (sl, tl) = (source.1, target.1);
        self.run_cached(key, "compare", background, move |cancel| {
            let payload = comparison_payload(&id, &resolved, (&src.store, sl), (&tgt.store, tl), cancel)?;
            Ok(to_bytes(&payload))
        })
    }

    pub fn glyphs(self: &Arc<Self>, id: &str, model: &str) -> Result<Arc<Vec<u8>>> {
        let handle = self.explanation(id)?;
        let entry = self.entry(model)?;
        let key = cache_key(&["glyphs", ENGINE_VERSION, id, model, &entry.fingerprint]);
        let resolved = handle.resolve()?;
        let id = id.to_string();
        let out = self.run_cached(key, "glyphs", false, move |_| Ok(to_bytes(&glyph_series(&resolved, &entry.store, &id))))?;
        Ok(out.into_ready())
    }

    pub fn word_details(&self, model: &str, word: &str) -> Result<Vec<u8>> {
        let store = self.model(model)?;
        Ok(to_bytes(&word_details(&store, word)))
    }

    /// Pixel matrix for a word selection. Clustering runs as a job when
    /// `background` is set.
    pub fn pixel(self: &Arc<Self>, request: PixelRequest, background: bool) -> Result<Computed> {
        let entry = self.entry(&request.model)?;
        let layers = entry.store.layers();
        if request.layer == 0 || request.layer > layers {
            return Err(conceptlens::Error::Config(format!("layer {} outside 1..={layers}", request.layer)).into());
        }
        if request.words.is_empty() {
            return Err(EngineError::BadRequest("words must not be empty".into()));
        }
        let cluster = request.cluster.then(|| request.min_cluster_size.unwrap_or(DEFAULT_MIN_CLUSTER_SIZE));
        let words_json = serde_json::to_string(&request.words).expect("strings serialize");
        let key = cache_key(&[
            "pixel",
            ENGINE_VERSION,
            &request.model,
            &entry.fingerprint,
            request.kind.as_str(),
            &request.layer.to_string(),
            &words_json,
            &format!("{cluster:?}"),
        ]);
        let background = background && cluster.is_some();
        self.run_cached(key, "pixel", background, move |_| {
            Ok(to_bytes(&pixel_payload(&request.words, &entry.store, request.kind, request.layer, cluster)?))
        })
    }

    /// Job status as JSON, with the payload embedded once it is done.
    pub fn job(&self, id: &str) -> Result<Vec<u8>> {
        let info = self.jobs.get(id).ok_or_else(|| EngineError::UnknownJob(id.to_string()))?;
        let mut body = to_bytes(&info);
        if info.status == JobStatus::Done {
            if let Some(payload) = self.cache.get(id) {
                body.pop();
                body.extend_from_slice(b",\"result\":");
                body.extend_from_slice(&payload);
                body.push(b'}');
            }
        }
        Ok(body)
    }

    pub fn cancel_job(&self, id: &str) -> Result<()> {
        if self.jobs.cancel(id) {
            Ok(())
        } else {
            Err(EngineError::UnknownJob(id.to_string()))
        }
    }

    /// Computes and caches the single payload for every model and layer,
    /// plus each model's glyph series.
    pub fn precompute(self: &Arc<Self>, id: &str) -> Result<PrecomputeReport> {
        self.explanation(id)?;
        let mut report = PrecomputeReport::default();
        for summary in self.models() {
            for layer in 1..=summary.layers {
                match self.single(id, &summary.model_id, Some(layer), false) {
                    Ok(_) => report.payloads += 1,
                    Err(e) => report.failures.push(format!("{} layer {layer}: {e}", summary.model_id)),
                }
            }
            match self.glyphs(id, &summary.model_id) {
                Ok(_) => report.payloads += 1,
                Err(e) => report.failures.push(format!("{} glyphs: {e}", summary.model_id)),
            }
        }
        Ok(report)
    }
}
