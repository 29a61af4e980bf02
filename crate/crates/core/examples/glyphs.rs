//! Per-layer layout quality scores, as shown in the layer glyph strip.

use conceptlens::quality::glyph_series;
use conceptlens::{generate_dump, load_dump, EmbeddingKind, ExplanationConfig, ResolvedExplanation, SynthParams};

fn main() -> conceptlens::Result<()> {
    let params = SynthParams { separation: 0.0, layer_drift: 2.5, layers: 12, words_per_pole: 30, noise: 0.6, seed: 4, ..SynthParams::default() };
    let dump = generate_dump(&params)?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    let store = load_dump(dir.path())?;
    let concept = dump.concept;

    let config = ExplanationConfig::similarity(concept.name(), concept.name(), EmbeddingKind::Contextualized, 1);
    let resolved = ResolvedExplanation::resolve(config, |_| Some(concept.clone()))?;
    let series = glyph_series(&resolved, &store, "example");
    for s in &series.scores {
        let score = s.score.unwrap_or(f64::NAN);
        println!("layer {:>2} {:.3} {}", s.layer, score, "*".repeat((score * 40.0) as usize));
    }
    Ok(())
}
