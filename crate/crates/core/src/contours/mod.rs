//! Density-contour summaries of 2-D point clouds: Gaussian KDE on a square
//! grid, equally spaced thresholds, and marching-squares rings.

mod kde;
mod marching;

use serde::Serialize;

pub use kde::{kde_grid, kde_grid_in, Bounds, DensityGrid, GridFrame};
pub use marching::{inside_rings, marching_squares, ring_area, Ring};

use crate::error::{Error, Result};
use crate::model::ContourParams;

/// Thresholds `j / (n + 1) * max` for `j = 1..=n`.
pub fn contour_levels(grid: &DensityGrid, n_levels: usize) -> Result<Vec<f64>> {
    let max = grid.max();
    if max <= 0.0 {
        return Err(Error::FlatGrid);
    }
    Ok(levels_for_max(max, n_levels))
}

pub(crate) fn levels_for_max(max: f64, n_levels: usize) -> Vec<f64> {
    (1..=n_levels).map(|j| j as f64 / (n_levels + 1) as f64 * max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourSet {
    pub pole_label: String,
    /// Ascending density thresholds.
    pub levels: Vec<f64>,
    /// Closed rings per level (first vertex repeated at the end).
    pub rings: Vec<Vec<Ring>>,
    /// Padded bounds of the density grid.
    pub bounds: Bounds,
}

impl ContourSet {
    /// Whether `p` is inside the region enclosed at `level` (even-odd rule,
    /// so holes are honored).
    pub fn contains(&self, level: usize, p: [f64; 2]) -> bool {
        inside_rings(&self.rings[level], p)
    }
}

/// Frame shared by every pole (and both models) of one view.
pub fn shared_frame<'a>(clouds: impl IntoIterator<Item = &'a [[f64; 2]]>, params: &ContourParams) -> Option<GridFrame> {
    let all: Vec<[f64; 2]> = clouds.into_iter().flatten().copied().collect();
    GridFrame::around(&all, params)
}

/// Contours for one point cloud on a given frame.
pub fn contour_set(label: &str, points: &[[f64; 2]], frame: GridFrame, n_levels: usize) -> Result<ContourSet> {
    if points.is_empty() {
        return Err(Error::DegenerateData(format!("pole `{label}` has no points")));
    }
    let grid = kde_grid_in(points, frame);
    let levels = contour_levels(&grid, n_levels)?;
    let rings = levels.iter().map(|&t| marching_squares(&grid, t)).collect();
    Ok(ContourSet { pole_label: label.to_string(), levels, rings, bounds: frame.bounds })
}

/// One contour set per pole, all on the same frame so they are comparable.
/// Pass `frame` to share it with another model's summary.
pub fn contour_summary(points_by_pole: &[(String, Vec<[f64; 2]>)], params: &ContourParams, frame: Option<GridFrame>) -> Result<Vec<ContourSet>> {
    params.validate()?;
    if let Some((label, _)) = points_by_pole.iter().find(|(_, pts)| pts.is_empty()) {
        return Err(Error::DegenerateData(format!("pole `{label}` has no points")));
    }
    let frame = match frame {
        Some(f) => f,
        None => shared_frame(points_by_pole.iter().map(|(_, p)| p.as_slice()), params)
            .ok_or_else(|| Error::DegenerateData("no points to summarize".into()))?,
    };
    points_by_pole
        .iter()
        .map(|(label, pts)| contour_set(label, pts, frame, params.n_levels))
        .collect()
}
