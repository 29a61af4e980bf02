//! Writes a synthetic model dump and loads it back.
//!
//! ```text
//! cargo run -p conceptlens --example synth_dump -- /tmp/dump
//! ```

use conceptlens::{generate_dump, load_dump, validate_store, SynthParams};

fn main() -> conceptlens::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("conceptlens-synth"));
    let params = SynthParams { separation: 60.0, layers: 6, seed: 42, ..SynthParams::default() };
    let dump = generate_dump(&params)?;
    dump.write_to(&out)?;
    for (name, bytes) in &dump.files {
        println!("{:<22} {:>9} bytes", name, bytes.len());
    }

    let store = load_dump(&out)?;
    println!("loaded {} (d = {}, {} layers, {} vectors) from {}", store.model_id(), store.dim(), store.layers(), store.vector_count(), out.display());
    let violations = validate_store(&store).err().map_or(0, |r| r.violations.len());
    println!("validation violations: {violations}");
    for pole in dump.concept.poles() {
        println!("pole {:?}: {} words", pole.label, pole.words.len());
    }
    Ok(())
}
