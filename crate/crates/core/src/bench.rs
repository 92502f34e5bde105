//! Batch-size scans and serial-versus-parallel timing.
//!
//! Each timed region runs the whole per-batch pipeline (load candidates,
//! predict offsets, correlate, write results). One untimed warm-up run
//! precedes the timed repetitions.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{
    evaluate_candidates, plan_batches, BackendDescriptor, ComputeBackend, PairGeometry, StagedPair,
    DEFAULT_MEMORY_BUDGET_BYTES,
};
use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::geodesy::{lla_to_ecef, EcefVector, GeodeticCoord, GridBounds};
use crate::scene::{EcefStateVector, Snapshot};
use crate::seed::mix64;
use crate::waveform::BasebandCapture;

pub const DEFAULT_COARSE_SIZES: [usize; 11] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];
pub const DEFAULT_FINE_WINDOW: usize = 8;
pub const MIN_SCAN_CANDIDATES: usize = 10_000;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-4;

/// Reference figures from the original GPU measurements. They describe
/// one particular machine and are carried in reports as context only.
pub const REFERENCE_NOTES: [&str; 3] = [
    "reference GPU measurement: batch size 8 was fastest, with local minima at 32 and 64",
    "reference GPU measurement: parallel/serial speedup of about 26x to 28x across candidate counts",
    "reference figures are hardware specific and are not asserted",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadInfo {
    pub candidates: usize,
    pub capture_len: usize,
}

/// Inputs of one timed correlation run: a staged capture pair, receiver
/// geometry and candidate positions.
#[derive(Debug, Clone)]
pub struct Workload {
    pub staged: StagedPair,
    pub geometry: PairGeometry,
    pub points: Vec<EcefVector>,
    y1: Vec<Complex64>,
    y2: Vec<Complex64>,
}

fn random_points(bounds: &GridBounds, altitude_m: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<EcefVector>> {
    (0..n)
        .map(|_| {
            let lat = rng.random_range(bounds.lat_min_deg..=bounds.lat_max_deg);
            let lon = rng.random_range(bounds.lon_min_deg..=bounds.lon_max_deg);
            Ok(lla_to_ecef(&GeodeticCoord::new(lat, lon, altitude_m)?))
        })
        .collect()
}

impl Workload {
    fn assemble(
        y1: BasebandCapture,
        y2: BasebandCapture,
        rx_i: EcefStateVector,
        rx_j: EcefStateVector,
        points: Vec<EcefVector>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("workload needs at least one candidate"));
        }
        let geometry = PairGeometry {
            rx_i,
            rx_j,
            wavelength_m: PhysicalConstants::for_carrier(y1.center_freq_hz).wavelength_m(),
        };
        Ok(Self {
            staged: StagedPair::new(&y1, &y2)?,
            geometry,
            points,
            y1: y1.samples,
            y2: y2.samples,
        })
    }

    /// Receivers 0 and 1 of `snapshot`, optionally truncated to
    /// `capture_len` samples, with `candidates` random points in `bounds`.
    pub fn from_snapshot(
        snapshot: &Snapshot,
        capture_len: Option<usize>,
        bounds: &GridBounds,
        altitude_m: f64,
        candidates: usize,
        seed: u64,
    ) -> Result<Self> {
        snapshot.validate()?;
        let trim = |c: &BasebandCapture| {
            let n = capture_len.unwrap_or(c.len()).min(c.len());
            BasebandCapture::new(c.samples[..n].to_vec(), c.sample_rate_hz, c.start_time_s, c.center_freq_hz)
        };
        let (a, b) = (&snapshot.receivers[0], &snapshot.receivers[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_points(bounds, altitude_m, candidates, &mut rng)?;
        Self::assemble(trim(&a.capture)?, trim(&b.capture)?, a.state, b.state, points)
    }

    /// Self-contained workload of random captures and a fixed two-orbit
    /// geometry over a 2-degree box; handy for tests.
    pub fn synthetic(candidates: usize, capture_len: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut noise = |n: usize| -> Vec<Complex64> {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let fs = 2.048e6;
        let y1 = BasebandCapture::new(noise(capture_len), fs, 0.0, crate::constants::GPS_L1_HZ)?;
        let y2 = BasebandCapture::new(noise(capture_len), fs, 0.0, crate::constants::GPS_L1_HZ)?;
        let rx_i = crate::scene::CircularOrbit::passing_over(30.0, 40.0, 550e3, 53.0, 0.0, true)?.state_at(0.0);
        let rx_j = crate::scene::CircularOrbit::passing_over(31.0, 43.0, 550e3, 97.0, 0.0, false)?.state_at(0.0);
        let bounds = GridBounds::centered(30.5, 41.0, 1, 1.0);
        let points = random_points(&bounds, 0.0, candidates, &mut rng)?;
        Self::assemble(y1, y2, rx_i, rx_j, points)
    }

    pub fn info(&self) -> WorkloadInfo {
        WorkloadInfo {
            candidates: self.points.len(),
            capture_len: self.staged.len(),
        }
    }

    /// First `n` candidates of this workload.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.points.len() {
            return Err(invalid(format!("cannot take {n} of {} candidates", self.points.len())));
        }
        let mut w = self.clone();
        w.points.truncate(n);
        Ok(w)
    }

    /// Hash over every input bit; used to prove runs leave inputs intact.
    pub fn checksum(&self) -> u64 {
        let mut h = mix64(self.points.len() as u64);
        let mut eat = |v: f64| h = mix64(h ^ v.to_bits());
        for s in self.y1.iter().chain(&self.y2) {
            eat(s.re);
            eat(s.im);
        }
        for p in &self.points {
            eat(p.x);
            eat(p.y);
            eat(p.z);
        }
        for s in [&self.geometry.rx_i, &self.geometry.rx_j] {
            for v in [s.position, s.velocity] {
                eat(v.x);
                eat(v.y);
                eat(v.z);
            }
        }
        eat(self.geometry.wavelength_m);
        h
    }

    pub fn run(&self, backend: &dyn ComputeBackend, batch_size: usize, memory_budget_bytes: u64) -> Result<Vec<f64>> {
        let plan = plan_batches(self.points.len(), batch_size, memory_budget_bytes, self.staged.len())?;
        evaluate_candidates(backend, &self.staged, &self.geometry, &self.points, &plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub times_s: Vec<f64>,
    pub mean_s: f64,
    pub median_s: f64,
}

impl Timing {
    pub fn from_times(times_s: Vec<f64>) -> Self {
        let mean_s = times_s.iter().sum::<f64>() / times_s.len() as f64;
        let mut sorted = times_s.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() / 2;
        let median_s = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[m - 1] + sorted[m])
        } else {
            sorted[m]
        };
        Self {
            times_s,
            mean_s,
            median_s,
        }
    }
}

/// Warm-up run, then `repetitions` timed runs. Returns the last output.
fn time_runs(
    workload: &Workload,
    backend: &dyn ComputeBackend,
    batch_size: usize,
    budget: u64,
    repetitions: usize,
) -> Result<(Timing, Vec<f64>)> {
    let mut out = workload.run(backend, batch_size, budget)?;
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t = Instant::now();
        out = workload.run(backend, batch_size, budget)?;
        // never report a zero duration, even on a coarse clock
        times.push(t.elapsed().as_secs_f64().max(1e-9));
    }
    Ok((Timing::from_times(times), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanStage {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub batch_size: usize,
    pub stage: ScanStage,
    pub timing: Option<Timing>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchScanReport {
    pub backend: BackendDescriptor,
    pub workload: WorkloadInfo,
    pub repetitions: usize,
    pub rows: Vec<ScanRow>,
    pub tested_sizes: Vec<usize>,
    pub argmin_batch_size: usize,
    pub input_checksum_before: u64,
    pub input_checksum_after: u64,
    pub annotations: Vec<String>,
}

fn fastest(rows: &[ScanRow]) -> Option<usize> {
    rows.iter()
        .filter_map(|r| r.timing.as_ref().map(|t| (r.batch_size, t.mean_s)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(b, _)| b)
}

/// Times every coarse size, then every size within `fine_window` of the
/// coarse winner. A failing size is recorded and the scan moves on.
pub fn scan_batch_sizes(
    backend: &dyn ComputeBackend,
    workload: &Workload,
    coarse_sizes: &[usize],
    fine_window: usize,
    repetitions: usize,
    memory_budget_bytes: u64,
) -> Result<BatchScanReport> {
    if repetitions < 3 {
        return Err(invalid("a scan needs at least 3 repetitions"));
    }
    if coarse_sizes.is_empty() || coarse_sizes.contains(&0) {
        return Err(invalid("coarse sizes must be non-empty and >= 1"));
    }
    let before = workload.checksum();
    let mut rows: Vec<ScanRow> = Vec::new();
    let time_size = |size: usize, stage: ScanStage, rows: &mut Vec<ScanRow>| {
        let (timing, error) = match time_runs(workload, backend, size, memory_budget_bytes, repetitions) {
            Ok((t, _)) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(ScanRow {
            batch_size: size,
            stage,
            timing,
            error,
        });
    };
    let mut coarse: Vec<usize> = coarse_sizes.to_vec();
    coarse.sort_unstable();
    coarse.dedup();
    for &size in &coarse {
        time_size(size, ScanStage::Coarse, &mut rows);
    }
    let coarse_best = fastest(&rows).ok_or_else(|| Error::Backend {
        backend: backend.descriptor().name,
        message: "every coarse batch size failed".into(),
    })?;
    let lo = coarse_best.saturating_sub(fine_window).max(1);
    for size in lo..=coarse_best + fine_window {
        if !coarse.contains(&size) {
            time_size(size, ScanStage::Fine, &mut rows);
        }
    }
    let mut tested_sizes: Vec<usize> = rows.iter().map(|r| r.batch_size).collect();
    tested_sizes.sort_unstable();
    let mut annotations = vec![
        format!("timed region: candidate load, offset prediction, correlation and write-back; 1 warm-up run excluded"),
    ];
    annotations.extend(REFERENCE_NOTES.iter().map(|s| s.to_string()));
    Ok(BatchScanReport {
        backend: backend.descriptor(),
        workload: workload.info(),
        repetitions,
        argmin_batch_size: fastest(&rows).unwrap_or(coarse_best),
        rows,
        tested_sizes,
        input_checksum_before: before,
        input_checksum_after: workload.checksum(),
        annotations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub candidates: usize,
    pub serial: Timing,
    pub parallel: Timing,
    /// Mean serial time over mean parallel time.
    pub speedup: f64,
    pub max_rel_error: f64,
    pub equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub serial_backend: BackendDescriptor,
    pub parallel_backend: BackendDescriptor,
    pub batch_size: usize,
    pub repetitions: usize,
    pub capture_len: usize,
    pub rows: Vec<SpeedupRow>,
    /// False when any row fails the equivalence check.
    pub valid: bool,
    pub input_checksum_before: u64,
    pub input_checksum_after: u64,
    pub annotations: Vec<String>,
}

/// Largest elementwise relative difference (0 where both are zero).
pub fn max_relative_error(reference: &[f64], other: &[f64]) -> f64 {
    reference
        .iter()
        .zip(other)
        .map(|(a, b)| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Times `serial` and `parallel` on the first `n` candidates of `workload`
/// for each `n` in `candidate_counts`, checking output equivalence.
pub fn compare_backends(
    serial: &dyn ComputeBackend,
    parallel: &dyn ComputeBackend,
    workload: &Workload,
    candidate_counts: &[usize],
    batch_size: usize,
    repetitions: usize,
) -> Result<SpeedupReport> {
    if repetitions < 3 {
        return Err(invalid("a comparison needs at least 3 repetitions"));
    }
    let before = workload.checksum();
    let budget = DEFAULT_MEMORY_BUDGET_BYTES;
    let mut rows = Vec::with_capacity(candidate_counts.len());
    for &n in candidate_counts {
        let w = workload.truncated(n)?;
        let (ts, out_s) = time_runs(&w, serial, batch_size, budget, repetitions)?;
        let (tp, out_p) = time_runs(&w, parallel, batch_size, budget, repetitions)?;
        let err = max_relative_error(&out_s, &out_p);
        rows.push(SpeedupRow {
            candidates: n,
            speedup: ts.mean_s / tp.mean_s,
            serial: ts,
            parallel: tp,
            max_rel_error: err,
            equivalent: err <= EQUIVALENCE_TOLERANCE,
        });
    }
    let mut annotations = vec![format!(
        "equivalence tolerance {EQUIVALENCE_TOLERANCE:e} relative per candidate; timed region includes offset prediction"
    )];
    annotations.extend(REFERENCE_NOTES.iter().map(|s| s.to_string()));
    Ok(SpeedupReport {
        serial_backend: serial.descriptor(),
        parallel_backend: parallel.descriptor(),
        batch_size,
        repetitions,
        capture_len: workload.staged.len(),
        valid: rows.iter().all(|r| r.equivalent),
        rows,
        input_checksum_before: before,
        input_checksum_after: workload.checksum(),
        annotations,
    })
}

impl BatchScanReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "batch-size scan on {}", self.backend);
        let _ = writeln!(
            s,
            "workload: {} candidates, {}-sample captures, {} repetitions",
            self.workload.candidates, self.workload.capture_len, self.repetitions
        );
        let _ = writeln!(s, "{:>6} {:>7} {:>12} {:>12}", "batch", "stage", "mean_s", "median_s");
        for r in &self.rows {
            let stage = match r.stage {
                ScanStage::Coarse => "coarse",
                ScanStage::Fine => "fine",
            };
            match (&r.timing, &r.error) {
                (Some(t), _) => {
                    let _ = writeln!(s, "{:>6} {:>7} {:>12.6} {:>12.6}", r.batch_size, stage, t.mean_s, t.median_s);
                }
                (None, e) => {
                    let _ = writeln!(s, "{:>6} {:>7} failed: {}", r.batch_size, stage, e.as_deref().unwrap_or("?"));
                }
            }
        }
        let _ = writeln!(s, "fastest batch size: {}", self.argmin_batch_size);
        for a in &self.annotations {
            let _ = writeln!(s, "note: {a}");
        }
        s
    }
}

impl SpeedupReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} vs {}", self.serial_backend, self.parallel_backend);
        let _ = writeln!(
            s,
            "batch size {}, {}-sample captures, {} repetitions",
            self.batch_size, self.capture_len, self.repetitions
        );
        let _ = writeln!(
            s,
            "{:>10} {:>12} {:>12} {:>8} {:>11}",
            "candidates", "serial_s", "parallel_s", "speedup", "max_rel_err"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>10} {:>12.6} {:>12.6} {:>8.2} {:>11.2e}{}",
                r.candidates,
                r.serial.mean_s,
                r.parallel.mean_s,
                r.speedup,
                r.max_rel_error,
                if r.equivalent { "" } else { "  NOT EQUIVALENT" }
            );
        }
        let _ = writeln!(s, "report {}", if self.valid { "valid" } else { "INVALID" });
        for a in &self.annotations {
            let _ = writeln!(s, "note: {a}");
        }
        s
    }
}

pub fn save_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_report<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ParallelBackend, SerialBackend};

    #[test]
    fn timing_statistics() {
        let t = Timing::from_times(vec![3.0, 1.0, 2.0, 10.0]);
        assert_eq!(t.mean_s, 4.0);
        assert_eq!(t.median_s, 2.5);
    }

    #[test]
    fn single_size_scan_picks_that_size() {
        let w = Workload::synthetic(200, 256, 1).unwrap();
        let r = scan_batch_sizes(&SerialBackend, &w, &[4], 0, 3, DEFAULT_MEMORY_BUDGET_BYTES).unwrap();
        assert_eq!(r.tested_sizes, vec![4]);
        assert_eq!(r.argmin_batch_size, 4);
        assert_eq!(r.input_checksum_before, r.input_checksum_after);
    }

    #[test]
    fn fine_window_follows_coarse_winner() {
        let w = Workload::synthetic(100, 128, 2).unwrap();
        let r = scan_batch_sizes(&SerialBackend, &w, &[1, 16], 2, 3, DEFAULT_MEMORY_BUDGET_BYTES).unwrap();
        let coarse_best = fastest(&r.rows[..2]).unwrap();
        let fine: Vec<usize> = r.rows.iter().filter(|x| x.stage == ScanStage::Fine).map(|x| x.batch_size).collect();
        let expect: Vec<usize> = (coarse_best.saturating_sub(2).max(1)..=coarse_best + 2)
            .filter(|s| *s != 1 && *s != 16)
            .collect();
        assert_eq!(fine, expect);
        let best = r.rows.iter().filter_map(|x| x.timing.as_ref().map(|t| t.mean_s)).fold(f64::MAX, f64::min);
        let chosen = r.rows.iter().find(|x| x.batch_size == r.argmin_batch_size).unwrap();
        assert_eq!(chosen.timing.as_ref().unwrap().mean_s, best);
    }

    #[test]
    fn failing_size_is_recorded_not_fatal() {
        let w = Workload::synthetic(50, 1000, 3).unwrap();
        // budget covers the captures plus small batches only
        let budget = 2 * 1000 * 16 + 4 * 48;
        let r = scan_batch_sizes(&SerialBackend, &w, &[1, 2, 64], 0, 3, budget).unwrap();
        let failed: Vec<_> = r.rows.iter().filter(|x| x.error.is_some()).map(|x| x.batch_size).collect();
        assert_eq!(failed, vec![64]);
    }

    #[test]
    fn self_comparison_and_report_round_trip() {
        let w = Workload::synthetic(2000, 512, 4).unwrap();
        let par = ParallelBackend::new(2).unwrap();
        let r = compare_backends(&SerialBackend, &par, &w, &[500, 2000], 8, 3).unwrap();
        assert!(r.valid);
        assert!(r.rows.iter().all(|x| x.max_rel_error <= 1e-4));
        assert_eq!(r.input_checksum_before, r.input_checksum_after);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        save_report(&r, &p).unwrap();
        let back: SpeedupReport = load_report(&p).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.render(), r.render());
        assert!(r.render().contains("26x to 28x"));
    }
}
