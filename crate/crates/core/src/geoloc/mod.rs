//! Position-domain correlation, accumulation and detection.

pub mod correlate;
pub mod detect;
pub mod geometry;
pub mod grid;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use correlate::{correlate_point, correlate_samples};
pub use detect::{detect_emitters, DetectionParams, EmitterEstimate};
pub use geometry::{predict_geometry, predict_pair_offsets, tdoa_to_samples, GeometryPrediction, PairOffsets};
pub use grid::{accumulate_grids, CorrelationGrid};

use crate::backend::{
    evaluate_candidates, plan_batches, ComputeBackend, PairGeometry, StagedPair, DEFAULT_BATCH_SIZE,
    DEFAULT_MEMORY_BUDGET_BYTES,
};
use crate::constants::PhysicalConstants;
use crate::error::{invalid, Result};
use crate::geodesy::CandidateGrid;
use crate::scene::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeolocationOptions {
    pub batch_size: usize,
    pub memory_budget_bytes: u64,
    pub detection: DetectionParams,
    /// Divide each snapshot grid by its median before summing.
    pub normalize_snapshots: bool,
}

impl Default for GeolocationOptions {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET_BYTES,
            detection: DetectionParams::default(),
            normalize_snapshots: false,
        }
    }
}

/// Correlation grid of receivers `pair.0` and `pair.1` of one snapshot.
pub fn correlate_snapshot(
    grid: &Arc<CandidateGrid>,
    snapshot: &Snapshot,
    pair: (usize, usize),
    backend: &dyn ComputeBackend,
    opts: &GeolocationOptions,
) -> Result<CorrelationGrid> {
    snapshot.validate()?;
    let (i, j) = pair;
    let (a, b) = match (snapshot.receivers.get(i), snapshot.receivers.get(j)) {
        (Some(a), Some(b)) if i != j => (a, b),
        _ => return Err(invalid(format!("invalid receiver pair ({i}, {j})"))),
    };
    let staged = StagedPair::new(&a.capture, &b.capture)?;
    let plan = plan_batches(grid.len(), opts.batch_size, opts.memory_budget_bytes, staged.len())?;
    let geometry = PairGeometry {
        rx_i: a.state,
        rx_j: b.state,
        wavelength_m: PhysicalConstants::for_carrier(a.capture.center_freq_hz).wavelength_m(),
    };
    let values = evaluate_candidates(backend, &staged, &geometry, grid.points(), &plan)?;
    CorrelationGrid::new(grid.clone(), values)
}

/// Snapshot grid: the sum of the pair grids over every receiver pair.
pub fn correlate_all_pairs(
    grid: &Arc<CandidateGrid>,
    snapshot: &Snapshot,
    backend: &dyn ComputeBackend,
    opts: &GeolocationOptions,
) -> Result<CorrelationGrid> {
    let m = snapshot.receivers.len();
    let mut total = CorrelationGrid::zeros(grid.clone());
    for i in 0..m {
        for j in i + 1..m {
            total.add_assign(&correlate_snapshot(grid, snapshot, (i, j), backend, opts)?)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeolocationResult {
    pub accumulated: CorrelationGrid,
    /// Peak value of each snapshot grid, in snapshot order.
    pub snapshot_peaks: Vec<f64>,
    pub detections: Vec<EmitterEstimate>,
}

/// Correlates every snapshot over all receiver pairs, accumulates the grids and runs detection.
/// Snapshot grids are folded in as they are produced, so memory stays at
/// two grids regardless of the snapshot count.
pub fn geolocate(
    grid: &Arc<CandidateGrid>,
    snapshots: &[Snapshot],
    backend: &dyn ComputeBackend,
    opts: &GeolocationOptions,
) -> Result<GeolocationResult> {
    geolocate_with(grid, snapshots, backend, opts, |_, _| Ok(()))
}

/// [`geolocate`] with a hook that sees each snapshot grid before it is
/// folded into the sum.
pub fn geolocate_with(
    grid: &Arc<CandidateGrid>,
    snapshots: &[Snapshot],
    backend: &dyn ComputeBackend,
    opts: &GeolocationOptions,
    mut on_snapshot: impl FnMut(&Snapshot, &CorrelationGrid) -> Result<()>,
) -> Result<GeolocationResult> {
    if snapshots.is_empty() {
        return Err(invalid("no snapshots to geolocate"));
    }
    let mut accumulated = CorrelationGrid::zeros(grid.clone());
    let mut snapshot_peaks = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let mut g = correlate_all_pairs(grid, snap, backend, opts)?;
        if opts.normalize_snapshots {
            g.normalize_by_median();
        }
        snapshot_peaks.push(g.max());
        on_snapshot(snap, &g)?;
        accumulated.add_assign(&g)?;
    }
    let detections = detect_emitters(
        &accumulated,
        opts.detection.k_sigma,
        opts.detection.exclusion_radius_cells,
    )?;
    Ok(GeolocationResult {
        accumulated,
        snapshot_peaks,
        detections,
    })
}
