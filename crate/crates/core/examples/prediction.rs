//! Prediction-ratio layout and per-word shifts between two models.

use conceptlens::prediction::{prediction_deltas, prediction_layout};
use conceptlens::{generate_dump, load_dump, ModelStore, SynthParams};

fn load(params: SynthParams) -> conceptlens::Result<(ModelStore, conceptlens::ConceptSpec)> {
    let dump = generate_dump(&params)?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    Ok((load_dump(dir.path())?, dump.concept))
}

fn main() -> conceptlens::Result<()> {
    let (base, concept) = load(SynthParams { label_bias: [0.5, 0.5], sentences_per_word: 40, seed: 2, ..SynthParams::default() })?;
    let (tuned, _) = load(SynthParams { label_bias: [0.9, 0.1], sentences_per_word: 40, seed: 2, ..SynthParams::default() })?;

    let source = prediction_layout(&concept, &base)?;
    let target = prediction_layout(&concept, &tuned)?;
    for p in target.points.iter().step_by(10) {
        println!("{:<10} pole {} r {:.3} x {:.3} (n = {})", p.word, p.pole_index, p.r, p.x, p.n_total);
    }

    let deltas = prediction_deltas(&source.points, &target.points, 0.05);
    println!(
        "toward class 0: {}, toward class 1: {}, unchanged: {}",
        deltas.toward_class0.len(),
        deltas.toward_class1.len(),
        deltas.unchanged.len()
    );
    Ok(())
}
