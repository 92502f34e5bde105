//! TOML scenario configuration.
//!
//! Every key carries its unit in its name. Unknown keys are rejected, and
//! both parse errors and range errors report the offending key and line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{DEFAULT_BATCH_SIZE, DEFAULT_MEMORY_BUDGET_BYTES};
use crate::error::{Error, Result};
use crate::geodesy::{EcefVector, GeodeticCoord, GridBounds, DEFAULT_MAX_GRID_POINTS};
use crate::geoloc::detect::{DetectionParams, DEFAULT_EXCLUSION_RADIUS_CELLS, DEFAULT_K_SIGMA};
use crate::geoloc::GeolocationOptions;
use crate::scene::{
    CaptureTiming, CircularOrbit, EcefStateVector, EmitterDef, GridSpec, NoiseModel, ReceiverDef, Scenario,
    TimedState, Trajectory, MAX_CAPTURE_DURATION_S,
};
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub capture: CaptureConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub compute: ComputeConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    pub receivers: Vec<ReceiverConfig>,
    #[serde(default)]
    pub emitters: Vec<EmitterConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub center_freq_hz: f64,
    pub snapshot_count: usize,
    pub snapshot_spacing_s: f64,
    #[serde(default)]
    pub first_epoch_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default = "yes")]
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            power: 1.0,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
    pub spacing_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
    #[serde(default = "default_max_points")]
    pub max_points: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
    #[serde(default = "default_radius")]
    pub exclusion_radius_cells: usize,
    #[serde(default)]
    pub normalize_snapshots: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            k_sigma: DEFAULT_K_SIGMA,
            exclusion_radius_cells: DEFAULT_EXCLUSION_RADIUS_CELLS,
            normalize_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeConfig {
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// 0 selects the machine's available parallelism.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub memory_budget_bytes: u64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            backend: default_backend(),
            batch_size: DEFAULT_BATCH_SIZE,
            workers: 0,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_scan_points")]
    pub scan_candidates: usize,
    #[serde(default = "default_compare_points")]
    pub compare_candidates: Vec<usize>,
    /// Capture length used by benchmarks; 0 keeps the scenario's length.
    #[serde(default)]
    pub capture_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: default_reps(),
            scan_candidates: default_scan_points(),
            compare_candidates: default_compare_points(),
            capture_samples: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassOverConfig {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
    pub inclination_deg: f64,
    #[serde(default)]
    pub t_pass_s: f64,
    #[serde(default = "yes")]
    pub ascending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRowConfig {
    pub epoch_s: f64,
    pub position_m: [f64; 3],
    pub velocity_mps: [f64; 3],
}

/// Exactly one of `orbit`, `pass_over` or `states` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<CircularOrbit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_over: Option<PassOverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateRowConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub alt_m: f64,
    pub ref_snr_db: f64,
    pub ref_range_m: f64,
    pub waveform: WaveformSpec,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_max_points() -> u64 {
    DEFAULT_MAX_GRID_POINTS
}
fn default_k_sigma() -> f64 {
    DEFAULT_K_SIGMA
}
fn default_radius() -> usize {
    DEFAULT_EXCLUSION_RADIUS_CELLS
}
fn default_backend() -> String {
    "serial".into()
}
fn default_batch() -> usize {
    DEFAULT_BATCH_SIZE
}
fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET_BYTES
}
fn default_reps() -> usize {
    10
}
fn default_scan_points() -> usize {
    500_000
}
fn default_compare_points() -> Vec<usize> {
    vec![10_000, 100_000]
}

/// A range violation: dotted key path, e.g. `emitters[1].ref_range_m`.
struct KeyError {
    key: String,
    message: String,
}

fn check(ok: bool, key: impl Into<String>, message: impl Into<String>) -> std::result::Result<(), KeyError> {
    if ok {
        Ok(())
    } else {
        Err(KeyError {
            key: key.into(),
            message: message.into(),
        })
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ScenarioConfig {
    fn check_ranges(&self) -> std::result::Result<(), KeyError> {
        let c = &self.capture;
        check(positive(c.sample_rate_hz), "capture.sample_rate_hz", "must be > 0")?;
        check(
            positive(c.duration_s) && c.duration_s <= MAX_CAPTURE_DURATION_S,
            "capture.duration_s",
            format!("must be in (0, {MAX_CAPTURE_DURATION_S}]"),
        )?;
        check(positive(c.center_freq_hz), "capture.center_freq_hz", "must be > 0")?;
        check(c.snapshot_count >= 1, "capture.snapshot_count", "must be >= 1")?;
        check(
            c.snapshot_spacing_s.is_finite() && c.snapshot_spacing_s >= 0.0,
            "capture.snapshot_spacing_s",
            "must be >= 0",
        )?;
        check(positive(self.noise.power), "noise.power", "must be > 0")?;

        let g = &self.grid;
        check((-90.0..=90.0).contains(&g.lat_min_deg), "grid.lat_min_deg", "must be in [-90, 90]")?;
        check((-90.0..=90.0).contains(&g.lat_max_deg), "grid.lat_max_deg", "must be in [-90, 90]")?;
        check(g.lat_max_deg >= g.lat_min_deg, "grid.lat_max_deg", "must be >= grid.lat_min_deg")?;
        check(g.lon_min_deg.is_finite(), "grid.lon_min_deg", "must be finite")?;
        check(g.lon_max_deg >= g.lon_min_deg, "grid.lon_max_deg", "must be >= grid.lon_min_deg")?;
        check(positive(g.spacing_deg), "grid.spacing_deg", "must be > 0")?;
        check(g.altitude_m.is_finite(), "grid.altitude_m", "must be finite")?;

        check(self.detection.k_sigma.is_finite(), "detection.k_sigma", "must be finite")?;
        check(self.compute.batch_size >= 1, "compute.batch_size", "must be >= 1")?;
        check(
            crate::backend::BACKEND_NAMES.contains(&self.compute.backend.as_str()),
            "compute.backend",
            format!("must be one of {:?}", crate::backend::BACKEND_NAMES),
        )?;
        check(self.bench.repetitions >= 3, "bench.repetitions", "must be >= 3")?;
        check(self.bench.scan_candidates >= 1, "bench.scan_candidates", "must be >= 1")?;

        check(self.receivers.len() >= 2, "receivers", "at least two receivers are required")?;
        for (i, r) in self.receivers.iter().enumerate() {
            let given = [r.orbit.is_some(), r.pass_over.is_some(), r.states.is_some()]
                .iter()
                .filter(|b| **b)
                .count();
            check(
                given == 1,
                format!("receivers[{i}].name"),
                "exactly one of orbit, pass_over or states is required",
            )?;
            if let Some(o) = &r.orbit {
                check(
                    (crate::scene::orbit::MIN_ALTITUDE_M..=crate::scene::orbit::MAX_ALTITUDE_M).contains(&o.alt_m),
                    format!("receivers[{i}].orbit.alt_m"),
                    "must be in [200000, 2000000]",
                )?;
            }
            if let Some(p) = &r.pass_over {
                check(
                    (crate::scene::orbit::MIN_ALTITUDE_M..=crate::scene::orbit::MAX_ALTITUDE_M).contains(&p.alt_m),
                    format!("receivers[{i}].pass_over.alt_m"),
                    "must be in [200000, 2000000]",
                )?;
            }
        }
        for (i, e) in self.emitters.iter().enumerate() {
            check((-90.0..=90.0).contains(&e.lat_deg), format!("emitters[{i}].lat_deg"), "must be in [-90, 90]")?;
            check(e.lon_deg.is_finite(), format!("emitters[{i}].lon_deg"), "must be finite")?;
            check(positive(e.ref_range_m), format!("emitters[{i}].ref_range_m"), "must be > 0")?;
            check(e.ref_snr_db.is_finite(), format!("emitters[{i}].ref_snr_db"), "must be finite")?;
            if let Err(err) = e.waveform.validate(c.sample_rate_hz) {
                return Err(KeyError {
                    key: format!("emitters[{i}].waveform"),
                    message: err.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Builds and validates the scenario described by this document.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let c = &self.capture;
        let receivers = self
            .receivers
            .iter()
            .map(|r| {
                let trajectory = if let Some(o) = r.orbit {
                    Trajectory::Circular(o)
                } else if let Some(p) = &r.pass_over {
                    Trajectory::Circular(CircularOrbit::passing_over(
                        p.lat_deg,
                        p.lon_deg,
                        p.alt_m,
                        p.inclination_deg,
                        p.t_pass_s,
                        p.ascending,
                    )?)
                } else {
                    let rows = r.states.as_deref().unwrap_or_default();
                    Trajectory::Table(
                        rows.iter()
                            .map(|s| TimedState {
                                epoch_s: s.epoch_s,
                                state: EcefStateVector::new(vec3(s.position_m), vec3(s.velocity_mps)),
                            })
                            .collect(),
                    )
                };
                Ok(ReceiverDef {
                    name: r.name.clone(),
                    trajectory,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let emitters = self
            .emitters
            .iter()
            .map(|e| {
                Ok(EmitterDef {
                    name: e.name.clone(),
                    location: GeodeticCoord::new(e.lat_deg, e.lon_deg, e.alt_m)?,
                    waveform: e.waveform.clone(),
                    ref_snr_db: e.ref_snr_db,
                    ref_range_m: e.ref_range_m,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let g = &self.grid;
        let sc = Scenario {
            receivers,
            emitters,
            timing: CaptureTiming {
                sample_rate_hz: c.sample_rate_hz,
                duration_s: c.duration_s,
                center_freq_hz: c.center_freq_hz,
                snapshot_count: c.snapshot_count,
                snapshot_spacing_s: c.snapshot_spacing_s,
                first_epoch_s: c.first_epoch_s,
            },
            noise: NoiseModel {
                seed: self.noise.seed,
                power: self.noise.power,
                enabled: self.noise.enabled,
            },
            grid: GridSpec {
                bounds: GridBounds {
                    lat_min_deg: g.lat_min_deg,
                    lat_max_deg: g.lat_max_deg,
                    lon_min_deg: g.lon_min_deg,
                    lon_max_deg: g.lon_max_deg,
                },
                spacing_deg: g.spacing_deg,
                altitude_m: g.altitude_m,
                max_points: g.max_points,
            },
            detection: DetectionParams {
                k_sigma: self.detection.k_sigma,
                exclusion_radius_cells: self.detection.exclusion_radius_cells,
            },
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn geolocation_options(&self) -> GeolocationOptions {
        GeolocationOptions {
            batch_size: self.compute.batch_size,
            memory_budget_bytes: self.compute.memory_budget_bytes,
            detection: DetectionParams {
                k_sigma: self.detection.k_sigma,
                exclusion_radius_cells: self.detection.exclusion_radius_cells,
            },
            normalize_snapshots: self.detection.normalize_snapshots,
        }
    }
}

fn vec3(v: [f64; 3]) -> EcefVector {
    EcefVector::new(v[0], v[1], v[2])
}

/// 1-based line of `key_path` (e.g. `emitters[1].ref_range_m`) in `text`.
fn locate_key(text: &str, key_path: &str) -> Option<usize> {
    let segments: Vec<&str> = key_path.split('.').collect();
    let (leaf, tables) = segments.split_last()?;
    let mut start = 0usize;
    let lines: Vec<&str> = text.lines().collect();
    for seg in tables {
        let (name, index) = match seg.split_once('[') {
            Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()),
            None => (*seg, None),
        };
        let mut seen = 0usize;
        let mut found = None;
        for (i, line) in lines.iter().enumerate().skip(start) {
            let t = line.trim();
            let header = t.trim_start_matches('[').trim_end_matches(']').trim();
            let is_header = t.starts_with('[') && header.rsplit('.').next() == Some(name);
            let is_inline = t.starts_with(name) && t[name.len()..].trim_start().starts_with('=');
            if is_header || is_inline {
                if index.is_none_or(|k| k == seen) {
                    found = Some(i);
                    break;
                }
                seen += 1;
            }
        }
        start = found?;
    }
    for (i, line) in lines.iter().enumerate().skip(start) {
        let t = line.trim_start();
        let hit = t.starts_with(leaf) && t[leaf.len()..].trim_start().starts_with('=');
        let inline = t.contains(&format!("{leaf} =")) || t.contains(&format!("{leaf}="));
        if hit || (i == start && inline) {
            return Some(i + 1);
        }
    }
    (!tables.is_empty()).then_some(start + 1)
}

/// Parses and validates a scenario document held in memory.
pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<(ScenarioConfig, Scenario)> {
    let config_err = |message: String| Error::Config {
        path: origin.to_path_buf(),
        message,
    };
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| config_err(e.to_string().trim_end().to_string()))?;
    if let Err(k) = cfg.check_ranges() {
        let line = locate_key(text, &k.key)
            .map(|l| format!(" (line {l})"))
            .unwrap_or_default();
        return Err(config_err(format!("key `{}`{line}: {}", k.key, k.message)));
    }
    let sc = cfg.to_scenario().map_err(|e| config_err(e.to_string()))?;
    Ok((cfg, sc))
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<(ScenarioConfig, Scenario)> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config {
        path: path.clone(),
        message: format!("cannot read: {e}"),
    })?;
    parse_scenario_str(&text, &path)
}
