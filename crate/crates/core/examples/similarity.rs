//! Anchor-similarity layout for one model, then displacements against a
//! second model whose poles have drifted apart.

use conceptlens::similarity::{displacement_categories, similarity_layout};
use conceptlens::quality::dsc;
use conceptlens::{generate_dump, load_dump, EmbeddingKind, ModelStore, SynthParams};

fn store(params: &SynthParams) -> conceptlens::Result<(ModelStore, conceptlens::ConceptSpec, tempfile::TempDir)> {
    let dump = generate_dump(params)?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    Ok((load_dump(dir.path())?, dump.concept, dir))
}

fn main() -> conceptlens::Result<()> {
    let (base, concept, _a) = store(&SynthParams { separation: 20.0, seed: 1, ..SynthParams::default() })?;
    let (tuned, _, _b) = store(&SynthParams { separation: 80.0, seed: 1, model_id: "tuned".into(), ..SynthParams::default() })?;

    let source = similarity_layout(&concept, &concept, &base, EmbeddingKind::Contextualized, 1)?;
    let target = similarity_layout(&concept, &concept, &tuned, EmbeddingKind::Contextualized, 1)?;
    for (name, layout) in [("base", &source), ("tuned", &target)] {
        let coords: Vec<[f64; 2]> = layout.points.iter().map(|p| [p.x, p.y]).collect();
        let labels: Vec<usize> = layout.points.iter().map(|p| p.pole_index).collect();
        println!("{name:<6} dsc {:.3}", dsc(&coords, &labels)?);
    }

    for p in source.points.iter().take(3) {
        println!("{:<10} pole {} x {:+.3} y {:+.3}", p.word, p.pole_index, p.x, p.y);
    }

    let summary = displacement_categories(&source.points, &target.points, 0.01);
    println!("words per 45 degree sector: {:?}", summary.sector_counts());
    println!("negligible: {}", summary.negligible.len());
    Ok(())
}
