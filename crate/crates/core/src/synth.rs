//! Deterministic synthetic model dumps with a known two-pole structure.
//!
//! Each pole has a unit mean direction; the two directions lie in a random
//! plane at the configured angle, widened by `layer_drift` degrees per
//! layer. Word vectors are the normalized sum of the pole direction and
//! isotropic Gaussian noise whose expected norm is `noise`. Predictions
//! label each sentence class 0 with the pole's `label_bias` probability.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_concept, ConceptSpec, EmbeddingKind, PredictionRecord, RawConcept, RawPole};
use crate::store::{to_jsonl, DumpManifest, EmbeddingRow, SentenceRow, EMBEDDINGS_FILE, MANIFEST_FILE, PREDICTIONS_FILE, SENTENCES_FILE};

/// Upper bound on sentences per word, matching the extractor's context cap.
pub const MAX_SENTENCES_PER_WORD: usize = 300;

const TEMPLATES: [&str; 4] = [
    "{W} was mentioned in the review.",
    "Everyone talked about {w} that evening.",
    "The story about {w} went on for a while.",
    "I would not call it {w}, but close.",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub model_id: String,
    pub base_model: String,
    pub d: usize,
    pub layers: u32,
    pub words_per_pole: usize,
    pub concept_name: String,
    pub pole_labels: [String; 2],
    /// Word stems; pole `i` gets words `{stem}_000`, `{stem}_001`, ...
    pub word_stems: [String; 2],
    /// Angle between the pole mean directions at layer 1, in degrees.
    pub separation: f64,
    /// Expected norm of the noise added to each unit mean direction.
    pub noise: f64,
    /// Added to the separation for each layer after the first, in degrees.
    pub layer_drift: f64,
    /// Probability of class 0 per pole.
    pub label_bias: [f64; 2],
    pub sentences_per_word: usize,
    pub predictions: bool,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            model_id: "synth".into(),
            base_model: "synthetic".into(),
            d: 32,
            layers: 4,
            words_per_pole: 20,
            concept_name: "synthetic".into(),
            pole_labels: ["pole a".into(), "pole b".into()],
            word_stems: ["alpha".into(), "beta".into()],
            separation: 90.0,
            noise: 0.3,
            layer_drift: 0.0,
            label_bias: [0.5, 0.5],
            sentences_per_word: 10,
            predictions: true,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if self.layers < 1 {
            return bad("layers must be at least 1".into());
        }
        if self.words_per_pole < 2 {
            return bad(format!("words_per_pole must be at least 2, got {}", self.words_per_pole));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return bad(format!("noise must be > 0, got {}", self.noise));
        }
        if !self.separation.is_finite() || !self.layer_drift.is_finite() {
            return bad("separation and layer_drift must be finite".into());
        }
        if self.label_bias.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return bad(format!("label_bias must lie in [0, 1], got {:?}", self.label_bias));
        }
        if !(1..=MAX_SENTENCES_PER_WORD).contains(&self.sentences_per_word) {
            return bad(format!("sentences_per_word must be in 1..={MAX_SENTENCES_PER_WORD}, got {}", self.sentences_per_word));
        }
        if self.word_stems[0].trim().is_empty() || self.word_stems[1].trim().is_empty() {
            return bad("word stems must be non-empty".into());
        }
        if self.word_stems[0].trim().eq_ignore_ascii_case(self.word_stems[1].trim()) {
            return bad("word stems must differ".into());
        }
        Ok(())
    }

    /// Separation at `layer`, in degrees.
    pub fn separation_at(&self, layer: u32) -> f64 {
        self.separation + f64::from(layer - 1) * self.layer_drift
    }

    pub fn words(&self, pole: usize) -> Vec<String> {
        (0..self.words_per_pole).map(|i| format!("{}_{i:03}", self.word_stems[pole].trim())).collect()
    }
}

/// A generated dump: the four dump files plus the generating concept.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDump {
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub concept: ConceptSpec,
}

impl SynthDump {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Random orthonormal pair spanning the plane of the pole directions.
fn plane(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    let e1 = normalized(gaussian(rng, d));
    loop {
        let mut e2 = gaussian(rng, d);
        let dot: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
        for (x, a) in e2.iter_mut().zip(&e1) {
            *x -= dot * a;
        }
        if e2.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
            return (e1, normalized(e2));
        }
    }
}

fn template(word: &str, j: usize) -> String {
    let t = TEMPLATES[j % TEMPLATES.len()];
    let mut cap = word.to_string();
    if let Some(first) = cap.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    t.replace("{W}", &cap).replace("{w}", word)
}

pub fn generate_dump(params: &SynthParams) -> Result<SynthDump> {
    params.validate()?;
    let concept = validate_concept(RawConcept {
        name: params.concept_name.clone(),
        poles: (0..2)
            .map(|p| RawPole { label: params.pole_labels[p].clone(), words: params.words(p) })
            .collect(),
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let d = params.d;
    let (e1, e2) = plane(&mut rng, d);
    let scale = params.noise / (d as f64).sqrt();

    let mut embeddings = Vec::new();
    for layer in 1..=params.layers {
        // Poles sit symmetrically around e1 at ±half the separation.
        let half = params.separation_at(layer).to_radians() / 2.0;
        for (pole, sign) in [(0usize, -1.0f64), (1, 1.0)] {
            let (c, s) = ((sign * half).cos(), (sign * half).sin());
            let mean: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| c * a + s * b).collect();
            for word in params.words(pole) {
                for kind in EmbeddingKind::ALL {
                    let noise = gaussian(&mut rng, d);
                    let v = normalized(mean.iter().zip(&noise).map(|(m, z)| m + scale * z).collect());
                    let count = match kind {
                        EmbeddingKind::Context0 => None,
                        EmbeddingKind::Contextualized => Some(params.sentences_per_word as u32),
                    };
                    embeddings.push(EmbeddingRow {
                        word: word.clone(),
                        kind,
                        layer,
                        vector: v.into_iter().map(|x| x as f32).collect(),
                        count,
                    });
                }
            }
        }
    }

    let mut sentences = Vec::new();
    let mut predictions = Vec::new();
    for pole in 0..2 {
        for word in params.words(pole) {
            for j in 0..params.sentences_per_word {
                let sentence_id = format!("{word}-{j:03}");
                if params.predictions {
                    let label = if rng.random::<f64>() < params.label_bias[pole] { 0 } else { 1 };
                    predictions.push(PredictionRecord { word: word.clone(), sentence_id: sentence_id.clone(), label });
                }
                sentences.push(SentenceRow { sentence_id, word: word.clone(), text: template(&word, j) });
            }
        }
    }

    let manifest = DumpManifest {
        model_id: params.model_id.clone(),
        base_model: params.base_model.clone(),
        dim: d,
        layers: params.layers,
        has_predictions: params.predictions,
        prediction_labels: params.predictions.then(|| vec!["class 0".to_string(), "class 1".to_string()]),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    manifest_bytes.push(b'\n');

    let mut files = vec![
        (MANIFEST_FILE, manifest_bytes),
        (EMBEDDINGS_FILE, to_jsonl(&embeddings)),
        (SENTENCES_FILE, to_jsonl(&sentences)),
    ];
    if params.predictions {
        files.push((PREDICTIONS_FILE, to_jsonl(&predictions)));
    }
    Ok(SynthDump { files, concept })
}
