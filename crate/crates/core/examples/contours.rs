//! Density contours for the two poles of a similarity layout.

use conceptlens::contours::{contour_summary, ring_area};
use conceptlens::similarity::similarity_layout;
use conceptlens::{generate_dump, load_dump, ContourParams, EmbeddingKind, SynthParams};

fn main() -> conceptlens::Result<()> {
    let dump = generate_dump(&SynthParams { words_per_pole: 60, seed: 3, ..SynthParams::default() })?;
    let dir = tempfile::tempdir().expect("temp dir");
    dump.write_to(dir.path())?;
    let store = load_dump(dir.path())?;
    let concept = dump.concept;

    let layout = similarity_layout(&concept, &concept, &store, EmbeddingKind::Contextualized, 1)?;
    let by_pole: Vec<(String, Vec<[f64; 2]>)> = concept
        .poles()
        .iter()
        .enumerate()
        .map(|(i, pole)| {
            let pts = layout.points.iter().filter(|p| p.pole_index == i).map(|p| [p.x, p.y]).collect();
            (pole.label.clone(), pts)
        })
        .collect();

    for set in contour_summary(&by_pole, &ContourParams::default(), None)? {
        println!("{} bounds {:?}", set.pole_label, set.bounds);
        for (level, rings) in set.levels.iter().zip(&set.rings) {
            let area: f64 = rings.iter().map(ring_area).sum();
            println!("  level {level:>10.4}: {} ring(s), area {area:.4}", rings.len());
        }
    }
    Ok(())
}
