//! Iso-line extraction by marching squares.
//!
//! The lattice is the grid of cell centers, surrounded by a virtual ring of
//! below-threshold values so every contour closes. Crossings against that
//! ring are pinned to the border lattice point, which closes rings along
//! the grid border.

use std::collections::{HashMap, HashSet};

use super::kde::DensityGrid;

pub type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct EdgeKey {
    row: usize,
    col: usize,
    horizontal: bool,
}

struct Lattice<'a> {
    grid: &'a DensityGrid,
    g: usize,
}

impl Lattice<'_> {
    // Padded coordinates: 0 and g+1 are virtual.
    fn value(&self, row: usize, col: usize) -> Option<f64> {
        (1..=self.g).contains(&row).then_some(())?;
        (1..=self.g).contains(&col).then_some(())?;
        Some(self.grid.at(col - 1, row - 1))
    }

    fn position(&self, row: usize, col: usize) -> [f64; 2] {
        let r = row.clamp(1, self.g) - 1;
        let c = col.clamp(1, self.g) - 1;
        self.grid.frame.cell_center(c, r)
    }

    fn inside(&self, row: usize, col: usize, t: f64) -> bool {
        self.value(row, col).is_some_and(|v| v >= t)
    }

    fn crossing(&self, e: EdgeKey, t: f64) -> [f64; 2] {
        let (r1, c1) = if e.horizontal { (e.row, e.col + 1) } else { (e.row + 1, e.col) };
        let (a, b) = (self.value(e.row, e.col), self.value(r1, c1));
        let (p, q) = (self.position(e.row, e.col), self.position(r1, c1));
        match (a, b) {
            (Some(a), Some(b)) => {
                let f = ((t - a) / (b - a)).clamp(0.0, 1.0);
                [p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])]
            }
            (Some(_), None) => p,
            (None, Some(_)) => q,
            (None, None) => unreachable!("virtual-only edges never cross"),
        }
    }
}

/// Closed iso-density rings at `threshold`. Region membership is
/// `value >= threshold`; saddle cells are resolved by the mean of the four
/// corners.
pub fn marching_squares(grid: &DensityGrid, threshold: f64) -> Vec<Ring> {
    let g = grid.size();
    let lat = Lattice { grid, g };
    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    let mut starts: Vec<EdgeKey> = Vec::new();

    for row in 0..=g {
        for col in 0..=g {
            let corners = [(row, col), (row, col + 1), (row + 1, col + 1), (row + 1, col)];
            let inside = corners.map(|(r, c)| lat.inside(r, c, threshold));
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let edges = [
                EdgeKey { row, col, horizontal: true },
                EdgeKey { row, col: col + 1, horizontal: false },
                EdgeKey { row: row + 1, col, horizontal: true },
                EdgeKey { row, col, horizontal: false },
            ];
            // Edge k joins corner k to corner k+1.
            let entering: Vec<usize> = (0..4).filter(|&k| !inside[k] && inside[(k + 1) % 4]).collect();
            let saddle = entering.len() == 2;
            let center_inside = saddle && {
                let vals: Vec<f64> = corners.iter().filter_map(|&(r, c)| lat.value(r, c)).collect();
                vals.len() == 4 && vals.iter().sum::<f64>() / 4.0 >= threshold
            };
            for &k in &entering {
                let exit = if !saddle {
                    (0..4).find(|&m| inside[m] && !inside[(m + 1) % 4]).expect("one exit edge")
                } else if center_inside {
                    (k + 3) % 4
                } else {
                    (k + 1) % 4
                };
                next.insert(edges[k], edges[exit]);
                starts.push(edges[k]);
            }
        }
    }

    let mut rings = Vec::new();
    let mut used: HashSet<EdgeKey> = HashSet::with_capacity(next.len());
    for start in starts {
        if used.contains(&start) {
            continue;
        }
        let mut ring: Ring = Vec::new();
        let mut edge = start;
        loop {
            used.insert(edge);
            let p = lat.crossing(edge, threshold);
            if ring.last() != Some(&p) {
                ring.push(p);
            }
            edge = next[&edge];
            if edge == start {
                break;
            }
        }
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if distinct(&ring) >= 3 {
            let first = ring[0];
            ring.push(first);
            rings.push(ring);
        }
    }
    rings
}

fn distinct(ring: &[[f64; 2]]) -> usize {
    let mut pts: Vec<(u64, u64)> = ring.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    pts.sort_unstable();
    pts.dedup();
    pts.len()
}

/// Even-odd point-in-polygon test over a set of closed rings.
pub fn inside_rings(rings: &[Ring], p: [f64; 2]) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Absolute enclosed area of a closed ring (shoelace).
pub fn ring_area(ring: &Ring) -> f64 {
    ring.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>().abs() / 2.0
}
