//! Threshold detection of emitters on a correlation grid.

use serde::{Deserialize, Serialize};

use super::grid::CorrelationGrid;
use crate::error::{invalid, Result};
use crate::geodesy::GeodeticCoord;

pub const DEFAULT_K_SIGMA: f64 = 5.0;
pub const DEFAULT_EXCLUSION_RADIUS_CELLS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub k_sigma: f64,
    pub exclusion_radius_cells: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            k_sigma: DEFAULT_K_SIGMA,
            exclusion_radius_cells: DEFAULT_EXCLUSION_RADIUS_CELLS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterEstimate {
    pub location: GeodeticCoord,
    pub grid_index: usize,
    pub lat_idx: usize,
    pub lon_idx: usize,
    pub score: f64,
    /// `(score - mean) / std` over the whole grid.
    pub score_zsigma: f64,
}

/// Local maxima (8-neighborhood) of a lat-major grid, as flat indices.
pub fn local_maxima(values: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let mut is_max = true;
            'nbr: for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if rr < 0 || cc < 0 || rr >= rows as i64 || cc >= cols as i64 {
                        continue;
                    }
                    if values[rr as usize * cols + cc as usize] > v {
                        is_max = false;
                        break 'nbr;
                    }
                }
            }
            if is_max {
                out.push(r * cols + c);
            }
        }
    }
    out
}

/// Local maxima above `mean + k_sigma * std`, accepted greedily by
/// descending score with a Chebyshev exclusion radius in cells.
pub fn detect_emitters(
    grid: &CorrelationGrid,
    k_sigma: f64,
    exclusion_radius_cells: usize,
) -> Result<Vec<EmitterEstimate>> {
    if grid.is_empty() {
        return Err(invalid("cannot detect on an empty grid"));
    }
    if !k_sigma.is_finite() {
        return Err(invalid("k_sigma must be finite"));
    }
    let (mean, std) = grid.mean_std();
    if std == 0.0 {
        return Ok(Vec::new());
    }
    let threshold = mean + k_sigma * std;
    let (rows, cols) = grid.grid.shape();
    let mut candidates: Vec<usize> = local_maxima(&grid.values, rows, cols)
        .into_iter()
        .filter(|&i| grid.values[i] > threshold)
        .collect();
    candidates.sort_by(|&a, &b| grid.values[b].total_cmp(&grid.values[a]).then(a.cmp(&b)));

    let radius = exclusion_radius_cells as i64;
    let mut accepted: Vec<EmitterEstimate> = Vec::new();
    for idx in candidates {
        let (r, c) = grid.grid.cell(idx);
        let clear = accepted.iter().all(|e| {
            let dr = (e.lat_idx as i64 - r as i64).abs();
            let dc = (e.lon_idx as i64 - c as i64).abs();
            dr.max(dc) > radius
        });
        if clear {
            let score = grid.values[idx];
            accepted.push(EmitterEstimate {
                location: grid.grid.geodetic(idx),
                grid_index: idx,
                lat_idx: r,
                lon_idx: c,
                score,
                score_zsigma: (score - mean) / std,
            });
        }
    }
    Ok(accepted)
}
