use serde::{Deserialize, Serialize};

use crate::model::ContourParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn of(points: &[[f64; 2]]) -> Option<Bounds> {
        let first = points.first()?;
        let mut b = Bounds { min_x: first[0], min_y: first[1], max_x: first[0], max_y: first[1] };
        for p in points {
            b.min_x = b.min_x.min(p[0]);
            b.min_y = b.min_y.min(p[1]);
            b.max_x = b.max_x.max(p[0]);
            b.max_y = b.max_y.max(p[1]);
        }
        Some(b)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.min_x..=self.max_x).contains(&p[0]) && (self.min_y..=self.max_y).contains(&p[1])
    }
}

/// The evaluation frame shared by every grid of one view: padded bounds
/// and the kernel bandwidth in data units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub bounds: Bounds,
    /// Gaussian kernel standard deviation in data units.
    pub bandwidth: f64,
    pub grid_size: usize,
}

impl GridFrame {
    /// Frame over `points`: the bandwidth (in grid cells) is converted to
    /// data units via the larger box extent over the grid size, and the box
    /// is padded by three bandwidths on every side.
    pub fn around(points: &[[f64; 2]], params: &ContourParams) -> Option<GridFrame> {
        let raw = Bounds::of(points)?;
        let mut extent = raw.width().max(raw.height());
        if extent <= 0.0 || !extent.is_finite() {
            extent = 1.0;
        }
        let h = params.bandwidth * extent / params.grid_size as f64;
        let pad = 3.0 * h;
        Some(GridFrame {
            bounds: Bounds {
                min_x: raw.min_x - pad,
                min_y: raw.min_y - pad,
                max_x: raw.max_x + pad,
                max_y: raw.max_y + pad,
            },
            bandwidth: h,
            grid_size: params.grid_size,
        })
    }

    pub fn cell_width(&self) -> f64 {
        self.bounds.width() / self.grid_size as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.bounds.height() / self.grid_size as f64
    }

    /// Data coordinates of the center of cell `(col, row)`.
    pub fn cell_center(&self, col: usize, row: usize) -> [f64; 2] {
        [
            self.bounds.min_x + (col as f64 + 0.5) * self.cell_width(),
            self.bounds.min_y + (row as f64 + 0.5) * self.cell_height(),
        ]
    }
}

/// Gaussian kernel density sampled at cell centers, row-major by y.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub frame: GridFrame,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn size(&self) -> usize {
        self.frame.grid_size
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.size() + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Cell with the highest density (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best % self.size(), best / self.size())
    }

    /// Bilinear interpolation between cell centers, clamped to the lattice.
    pub fn sample(&self, p: [f64; 2]) -> f64 {
        let g = self.size();
        let fx = ((p[0] - self.frame.bounds.min_x) / self.frame.cell_width() - 0.5).clamp(0.0, (g - 1) as f64);
        let fy = ((p[1] - self.frame.bounds.min_y) / self.frame.cell_height() - 0.5).clamp(0.0, (g - 1) as f64);
        let (c0, r0) = ((fx.floor() as usize).min(g - 2), (fy.floor() as usize).min(g - 2));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let top = self.at(c0, r0) * (1.0 - tx) + self.at(c0 + 1, r0) * tx;
        let bottom = self.at(c0, r0 + 1) * (1.0 - tx) + self.at(c0 + 1, r0 + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

/// Density over the frame fitted to `points` alone.
pub fn kde_grid(points: &[[f64; 2]], params: &ContourParams) -> Option<DensityGrid> {
    GridFrame::around(points, params).map(|frame| kde_grid_in(points, frame))
}

/// `density(c) = Σ exp(-‖c - p‖² / 2h²)` at every cell center of `frame`.
///
/// The kernel factorizes into x and y terms, so each point costs one outer
/// product instead of G² exponentials.
pub fn kde_grid_in(points: &[[f64; 2]], frame: GridFrame) -> DensityGrid {
    let g = frame.grid_size;
    let inv = 1.0 / (2.0 * frame.bandwidth * frame.bandwidth);
    let xs: Vec<f64> = (0..g).map(|c| frame.cell_center(c, 0)[0]).collect();
    let ys: Vec<f64> = (0..g).map(|r| frame.cell_center(0, r)[1]).collect();
    let mut values = vec![0.0; g * g];
    let mut ex = vec![0.0; g];
    for p in points {
        for (e, x) in ex.iter_mut().zip(&xs) {
            *e = (-(x - p[0]).powi(2) * inv).exp();
        }
        for (row, y) in ys.iter().enumerate() {
            let ey = (-(y - p[1]).powi(2) * inv).exp();
            if ey == 0.0 {
                continue;
            }
            for (v, e) in values[row * g..(row + 1) * g].iter_mut().zip(&ex) {
                *v += ey * e;
            }
        }
    }
    DensityGrid { frame, values }
}
