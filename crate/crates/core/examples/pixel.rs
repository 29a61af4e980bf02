//! Pixel matrix of raw embeddings, with columns grouped by cosine HDBSCAN.

use conceptlens::pixel::pixel_payload;
use conceptlens::{generate_dump, load_dump, EmbeddingKind, SynthParams};

fn main() -> conceptlens::Result<()> {
    let dump = generate_dump(&SynthParams { d: 24, words_per_pole: 15, noise: 0.2, seed: 8, ..SynthParams::default() })?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    let store = load_dump(dir.path())?;

    let words: Vec<String> = dump.concept.poles().iter().flat_map(|p| p.words.clone()).collect();
    let payload = pixel_payload(&words, &store, EmbeddingKind::Contextualized, 1, Some(5))?;
    println!("{} dims x {} words, values in {:?}", payload.matrix.len(), payload.columns.len(), payload.value_domain);

    // One character per cell: '#' strongly positive, '-' strongly negative.
    for &row in payload.row_order.iter().take(12) {
        let line: String = payload.matrix[row]
            .iter()
            .map(|&v| if v > 0.3 { '#' } else if v > 0.1 { '+' } else if v < -0.3 { '-' } else { '.' })
            .collect();
        println!("{row:>3} {line}");
    }
    let clusters: Vec<String> = payload.cluster_of.iter().map(|c| c.map_or("-".into(), |c| c.to_string())).collect();
    println!("    {}", clusters.join(""));
    Ok(())
}
