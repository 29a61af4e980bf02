//! Pixel-matrix view of raw embeddings: one unit-normalized column per
//! word, rows ordered by their median, optional cosine HDBSCAN grouping of
//! the columns.

mod hdbscan;

use serde::Serialize;

pub use hdbscan::{hdbscan_precomputed, Clustering};

use crate::error::{Error, Result};
use crate::model::{EmbeddingKind, ModelStore};
use crate::similarity::SkippedWord;
use crate::store::word_vector;

pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 5;

pub fn unit_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Row indices sorted by descending median across columns; equal medians
/// keep their original order. `rows[i]` holds the values of row `i`.
pub fn median_row_order(rows: &[Vec<f64>]) -> Vec<usize> {
    let medians: Vec<f64> = rows.iter().map(|r| median(&mut r.clone())).collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| medians[b].total_cmp(&medians[a]));
    order
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `1 - cosine` distances, clipped at 0, with an exact zero diagonal.
pub fn cosine_distance_matrix(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let units = vectors.iter().map(|v| unit_normalize(v)).collect::<Result<Vec<_>>>()?;
    let n = units.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dot: f64 = units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum();
            let d = (1.0 - dot).max(0.0);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Ok(dist)
}

/// HDBSCAN with cosine distance and `min_samples = min_cluster_size`.
pub fn cosine_hdbscan(vectors: &[Vec<f64>], min_cluster_size: usize) -> Result<Clustering> {
    if vectors.len() < min_cluster_size {
        return Err(Error::TooFewPoints { needed: min_cluster_size, found: vectors.len() });
    }
    let dist = cosine_distance_matrix(vectors)?;
    hdbscan_precomputed(&dist, vectors.len(), min_cluster_size, min_cluster_size)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PixelMatrixPayload {
    pub model_id: String,
    pub kind: EmbeddingKind,
    pub layer: u32,
    pub columns: Vec<String>,
    /// `d` rows of `n` values in original dimension order; apply
    /// `row_order` to display.
    pub matrix: Vec<Vec<f64>>,
    pub row_order: Vec<usize>,
    /// Cluster per column, `None` for noise or when clustering is off.
    pub cluster_of: Vec<Option<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cluster_size: Option<usize>,
    pub value_domain: [f64; 2],
    pub skipped: Vec<SkippedWord>,
}

/// Builds the pixel matrix for `words`. With `cluster = Some(m)` the columns
/// are clustered with `min_cluster_size = m` and grouped by cluster, noise
/// last; otherwise they follow the selection order.
pub fn pixel_payload(
    words: &[String],
    store: &ModelStore,
    kind: EmbeddingKind,
    layer: u32,
    cluster: Option<usize>,
) -> Result<PixelMatrixPayload> {
    let mut columns = Vec::new();
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for word in words {
        match word_vector(store, word, kind, layer) {
            Some(v) => {
                vectors.push(unit_normalize(&v)?);
                columns.push(word.clone());
            }
            None => skipped.push(SkippedWord { word: word.clone(), reason: format!("no {kind} vector at layer {layer}") }),
        }
    }
    if vectors.is_empty() {
        return Err(Error::DegenerateData("no selected word has a vector".into()));
    }

    let mut cluster_of = vec![None; vectors.len()];
    if let Some(m) = cluster {
        let clustering = cosine_hdbscan(&vectors, m)?;
        let mut order: Vec<usize> = (0..vectors.len()).collect();
        order.sort_by_key(|&i| clustering.labels[i].unwrap_or(usize::MAX));
        columns = order.iter().map(|&i| columns[i].clone()).collect();
        vectors = order.iter().map(|&i| vectors[i].clone()).collect();
        cluster_of = order.iter().map(|&i| clustering.labels[i]).collect();
    }

    let d = store.dim();
    let matrix: Vec<Vec<f64>> = (0..d).map(|r| vectors.iter().map(|v| v[r]).collect()).collect();
    let row_order = median_row_order(&matrix);
    let m = vectors.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    Ok(PixelMatrixPayload {
        model_id: store.model_id().to_string(),
        kind,
        layer,
        columns,
        matrix,
        row_order,
        cluster_of,
        min_cluster_size: cluster,
        value_domain: [-m, m],
        skipped,
    })
}
