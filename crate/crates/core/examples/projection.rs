//! PCA, MDS and t-SNE projections of one concept, with neighbor overlap
//! between two layers of the same model.

use conceptlens::projection::{neighborhood_categories, overlap_annotations};
use conceptlens::{compute_layout, generate_dump, load_dump, ExplanationConfig, ProjectionMethod, ResolvedExplanation, SingleLayout, SynthParams};
use conceptlens::EmbeddingKind;

fn main() -> conceptlens::Result<()> {
    let dump = generate_dump(&SynthParams { separation: 30.0, layer_drift: 30.0, layers: 3, seed: 5, ..SynthParams::default() })?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    let store = load_dump(dir.path())?;
    let concept = dump.concept;

    for method in [ProjectionMethod::Pca, ProjectionMethod::Mds, ProjectionMethod::Tsne] {
        let config = ExplanationConfig::projection(concept.name(), method, EmbeddingKind::Contextualized, 1);
        let resolved = ResolvedExplanation::resolve(config, |_| Some(concept.clone()))?;
        let early = compute_layout(&resolved, &store, 1, None)?;
        let late = compute_layout(&resolved, &store, 3, None)?;
        let (SingleLayout::Projection(a), SingleLayout::Projection(b)) = (&early, &late) else { unreachable!() };
        let annotations = overlap_annotations(a, b, 10);
        let mean = annotations.iter().map(|a| a.overlap as f64).sum::<f64>() / annotations.len() as f64;
        println!("{method:?}: dsc layer 1 {:.3}, layer 3 {:.3}, mean overlap {mean:.2}/10", early.dsc()?, late.dsc()?);
        if let Some(var) = a.explained_variance {
            println!("  explained variance {:.3} {:.3}", var[0], var[1]);
        }
        for c in neighborhood_categories(&annotations).iter().filter(|c| c.count > 0).take(4) {
            println!("  pole {} -> pole {}: {} words", c.source_pole, c.target_pole, c.count);
        }
    }
    Ok(())
}
