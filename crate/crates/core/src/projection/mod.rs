//! 2-D projections of concept word embeddings, their neighbor lists, and
//! neighborhood-overlap comparison between two models.

mod knn;
mod mds;
mod pca;
mod tsne;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::AtomicBool;

use serde::Serialize;

pub use knn::knn2d;
pub use mds::{classical_mds2, euclidean_distances, mds2, raw_stress, smacof, MdsProjection};
pub use pca::{pca2, PcaProjection};
pub use tsne::{conditional_probabilities, squared_distances, tsne2, TsneOptions, PERPLEXITY_TOLERANCE};

use crate::error::{Error, Result};
use crate::model::{normalize_word, ConceptSpec, EmbeddingKind, ModelStore, ProjectionMethod, ProjectionParams};
use crate::similarity::SkippedWord;
use crate::store::word_vector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedWord {
    pub word: String,
    pub x: f64,
    pub y: f64,
    /// Pole indices this word belongs to. Poles 0 and 1 come from the first
    /// concept, 2 and 3 from the second when two concepts are projected.
    pub poles: Vec<usize>,
}

impl ProjectedWord {
    pub fn primary_pole(&self) -> usize {
        self.poles[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionLayout {
    pub method: ProjectionMethod,
    pub layer: u32,
    pub kind: EmbeddingKind,
    pub pole_labels: Vec<String>,
    pub points: Vec<ProjectedWord>,
    /// Word to its k nearest words in the 2-D layout, nearest first.
    pub neighbors: BTreeMap<String, Vec<String>>,
    pub k: usize,
    pub skipped: Vec<SkippedWord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explained_variance: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress: Option<f64>,
}

impl ProjectionLayout {
    pub fn coords(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(ProjectedWord::primary_pole).collect()
    }
}

/// Words of one or two concepts with their pole tags. A word listed in
/// several poles keeps a single entry carrying every tag.
pub fn collect_words(concepts: &[&ConceptSpec]) -> Vec<(String, Vec<usize>)> {
    let mut order: Vec<(String, Vec<usize>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (c, concept) in concepts.iter().enumerate() {
        for (p, pole) in concept.poles().iter().enumerate() {
            let tag = c * 2 + p;
            for word in &pole.words {
                let key = normalize_word(word);
                match index.get(&key) {
                    Some(&i) => {
                        if !order[i].1.contains(&tag) {
                            order[i].1.push(tag);
                        }
                    }
                    None => {
                        index.insert(key, order.len());
                        order.push((word.clone(), vec![tag]));
                    }
                }
            }
        }
    }
    order
}

pub fn pole_labels(concepts: &[&ConceptSpec]) -> Vec<String> {
    concepts.iter().flat_map(|c| c.poles().iter().map(|p| p.label.clone())).collect()
}

/// Which projection to run, plus the caller's cancellation flag for t-SNE.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionRequest<'a> {
    pub method: ProjectionMethod,
    pub kind: EmbeddingKind,
    pub layer: u32,
    pub params: &'a ProjectionParams,
    pub cancel: Option<&'a AtomicBool>,
}

/// Projects the words of one or two concepts and attaches 2-D neighbor lists.
pub fn projection_layout(concepts: &[&ConceptSpec], store: &ModelStore, request: ProjectionRequest<'_>) -> Result<ProjectionLayout> {
    let ProjectionRequest { method, kind, layer, params, cancel } = request;
    let mut words = Vec::new();
    let mut tags = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (word, poles) in collect_words(concepts) {
        match word_vector(store, &word, kind, layer) {
            Some(mut v) => {
                if params.normalize {
                    v = crate::pixel::unit_normalize(&v)?;
                }
                words.push(word);
                tags.push(poles);
                rows.push(v);
            }
            None => skipped.push(SkippedWord { reason: format!("no {kind} vector at layer {layer}"), word }),
        }
    }

    let mut explained_variance = None;
    let mut stress = None;
    let coords = match method {
        ProjectionMethod::Pca => {
            let out = pca2(&rows)?;
            explained_variance = Some(out.explained_variance);
            out.coords
        }
        ProjectionMethod::Mds => {
            let out = mds2(&rows)?;
            stress = Some(out.stress);
            out.coords
        }
        ProjectionMethod::Tsne => {
            if rows.len() < 5 {
                return Err(Error::DegenerateData(format!("t-SNE needs at least 5 points, got {}", rows.len())));
            }
            let options = TsneOptions::new(params.effective_perplexity(rows.len()), params.seed, params.iterations);
            tsne2(&rows, &options, cancel)?
        }
    };

    let k = params.k.min(words.len().saturating_sub(1));
    let neighbor_idx = knn2d(&words, &coords, k);
    let neighbors = words
        .iter()
        .zip(&neighbor_idx)
        .map(|(w, list)| (w.clone(), list.iter().map(|&j| words[j].clone()).collect()))
        .collect();
    let points = words
        .into_iter()
        .zip(tags)
        .zip(coords)
        .map(|((word, poles), [x, y])| ProjectedWord { word, x, y, poles })
        .collect();

    Ok(ProjectionLayout {
        method,
        layer,
        kind,
        pole_labels: pole_labels(concepts),
        points,
        neighbors,
        k,
        skipped,
        explained_variance,
        stress,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSource {
    #[default]
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapAnnotation {
    pub word: String,
    pub pole: usize,
    /// Number of words in both the source and the target neighbor list.
    pub overlap: usize,
    pub k: usize,
    pub source_neighbors: Vec<String>,
    pub target_neighbors: Vec<String>,
    pub source_pole_counts: Vec<usize>,
    pub target_pole_counts: Vec<usize>,
    pub size_scale: f64,
    pub opacity_scale: f64,
    pub coordinates_from: CoordinateSource,
    pub x: f64,
    pub y: f64,
}

/// Compares neighborhoods of the words the two layouts share. Neighbor
/// lists are recomputed within the shared set so both sides draw from the
/// same candidates.
pub fn overlap_annotations(source: &ProjectionLayout, target: &ProjectionLayout, k: usize) -> Vec<OverlapAnnotation> {
    overlap_annotations_from(source, target, k, CoordinateSource::Source)
}

pub fn overlap_annotations_from(
    source: &ProjectionLayout,
    target: &ProjectionLayout,
    k: usize,
    coordinates_from: CoordinateSource,
) -> Vec<OverlapAnnotation> {
    let target_index: HashMap<String, usize> =
        target.points.iter().enumerate().map(|(i, p)| (normalize_word(&p.word), i)).collect();
    let shared: Vec<(usize, usize)> = source
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| target_index.get(&normalize_word(&p.word)).map(|&j| (i, j)))
        .collect();
    if shared.len() < 2 {
        return Vec::new();
    }

    let words: Vec<String> = shared.iter().map(|&(i, _)| source.points[i].word.clone()).collect();
    let src_xy: Vec<[f64; 2]> = shared.iter().map(|&(i, _)| [source.points[i].x, source.points[i].y]).collect();
    let tgt_xy: Vec<[f64; 2]> = shared.iter().map(|&(_, j)| [target.points[j].x, target.points[j].y]).collect();
    let poles: Vec<usize> = shared.iter().map(|&(i, _)| source.points[i].primary_pole()).collect();
    let k = k.min(words.len() - 1);
    let src_nn = knn2d(&words, &src_xy, k);
    let tgt_nn = knn2d(&words, &tgt_xy, k);
    let n_poles = source.pole_labels.len().max(target.pole_labels.len()).max(poles.iter().max().map_or(0, |m| m + 1));

    let counts = |list: &[usize]| {
        let mut c = vec![0; n_poles];
        for &j in list {
            c[poles[j]] += 1;
        }
        c
    };

    (0..words.len())
        .map(|i| {
            let overlap = src_nn[i].iter().filter(|j| tgt_nn[i].contains(j)).count();
            let frac = if k == 0 { 0.0 } else { overlap as f64 / k as f64 };
            let [x, y] = match coordinates_from {
                CoordinateSource::Source => src_xy[i],
                CoordinateSource::Target => tgt_xy[i],
            };
            OverlapAnnotation {
                word: words[i].clone(),
                pole: poles[i],
                overlap,
                k,
                source_neighbors: src_nn[i].iter().map(|&j| words[j].clone()).collect(),
                target_neighbors: tgt_nn[i].iter().map(|&j| words[j].clone()).collect(),
                source_pole_counts: counts(&src_nn[i]),
                target_pole_counts: counts(&tgt_nn[i]),
                size_scale: frac,
                opacity_scale: 1.0 - 0.8 * frac,
                coordinates_from,
                x,
                y,
            }
        })
        .collect()
}

/// Index of the largest count; ties go to the earlier pole.
fn dominant(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// `(dominant source pole, dominant target pole)` of one annotation.
pub fn neighborhood_category(annotation: &OverlapAnnotation) -> (usize, usize) {
    (dominant(&annotation.source_pole_counts), dominant(&annotation.target_pole_counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborhoodCategory {
    pub source_pole: usize,
    pub target_pole: usize,
    pub count: usize,
    pub words: Vec<String>,
}

/// Groups annotations by category for the filter glyphs.
pub fn neighborhood_categories(annotations: &[OverlapAnnotation]) -> Vec<NeighborhoodCategory> {
    let mut groups: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for a in annotations {
        groups.entry(neighborhood_category(a)).or_default().push(a.word.clone());
    }
    groups
        .into_iter()
        .map(|((source_pole, target_pole), words)| NeighborhoodCategory { source_pole, target_pole, count: words.len(), words })
        .collect()
}
