//! Multi-receiver capture synthesis.
//!
//! Each emitter's waveform is rendered once per snapshot over a window wide
//! enough to cover every receiver's propagation delay, then delayed
//! (integer shift plus frequency-domain fractional shift), Doppler rotated
//! and range scaled per receiver. Delay and Doppler are held constant over
//! a snapshot.

pub mod orbit;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::geodesy::{
    build_candidate_grid_capped, lla_to_ecef, CandidateGrid, EcefVector, GeodeticCoord, GridBounds,
    DEFAULT_MAX_GRID_POINTS, WGS84_B,
};
use crate::geoloc::detect::DetectionParams;
use crate::geoloc::geometry::predict_geometry;
use crate::seed;
use crate::waveform::{samples_for, BasebandCapture, WaveformSpec};

pub use orbit::{propagate_circular_orbit, CircularOrbit};

/// Longest capture for which delay and Doppler are treated as constant.
pub const MAX_CAPTURE_DURATION_S: f64 = 0.05;
/// Samples kept clear at either end of a transmit buffer.
pub const TRANSMIT_GUARD_SAMPLES: usize = 256;
const MAX_SPEED_MPS: f64 = 1e5;

/// Receiver position (m) and velocity (m/s) in ECEF.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefStateVector {
    pub position: EcefVector,
    pub velocity: EcefVector,
}

impl EcefStateVector {
    pub const fn new(position: EcefVector, velocity: EcefVector) -> Self {
        Self { position, velocity }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(invalid("state vector has non-finite components"));
        }
        if self.position.norm() <= WGS84_B {
            return Err(invalid("receiver position is inside the Earth"));
        }
        if self.velocity.norm() >= MAX_SPEED_MPS {
            return Err(invalid("receiver speed exceeds 1e5 m/s"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterDef {
    pub name: String,
    pub location: GeodeticCoord,
    pub waveform: WaveformSpec,
    /// Received SNR (dB) at `ref_range_m`, relative to the scenario noise power.
    pub ref_snr_db: f64,
    pub ref_range_m: f64,
}

impl EmitterDef {
    pub fn position(&self) -> EcefVector {
        lla_to_ecef(&self.location)
    }

    /// Complex amplitude magnitude at range `range_m` (free-space 1/range).
    pub fn amplitude_at(&self, range_m: f64, noise_power: f64) -> f64 {
        (noise_power * 10f64.powf(self.ref_snr_db / 10.0)).sqrt() * self.ref_range_m / range_m
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.ref_range_m.is_finite() && self.ref_range_m > 0.0) {
            return Err(invalid(format!("emitter {}: ref_range_m must be > 0", self.name)));
        }
        if !self.ref_snr_db.is_finite() {
            return Err(invalid(format!("emitter {}: ref_snr_db must be finite", self.name)));
        }
        GeodeticCoord::new(self.location.lat_deg, self.location.lon_deg, self.location.alt_m)?;
        self.waveform.validate(sample_rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedState {
    pub epoch_s: f64,
    pub state: EcefStateVector,
}

/// Where a receiver's state at a given epoch comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Trajectory {
    Circular(CircularOrbit),
    /// Explicit states, linearly interpolated between entries.
    Table(Vec<TimedState>),
}

impl Trajectory {
    pub fn state_at(&self, epoch_s: f64) -> Result<EcefStateVector> {
        match self {
            Trajectory::Circular(o) => Ok(o.state_at(epoch_s)),
            Trajectory::Table(rows) => {
                let tol = 1e-9;
                let first = rows.first().ok_or_else(|| invalid("empty state table"))?;
                let last = rows.last().unwrap();
                if epoch_s < first.epoch_s - tol || epoch_s > last.epoch_s + tol {
                    return Err(invalid(format!(
                        "epoch {epoch_s} s outside state table [{}, {}]",
                        first.epoch_s, last.epoch_s
                    )));
                }
                if let Some(r) = rows.iter().find(|r| (r.epoch_s - epoch_s).abs() <= tol) {
                    return Ok(r.state);
                }
                let hi = rows.iter().position(|r| r.epoch_s > epoch_s).unwrap();
                let (a, b) = (&rows[hi - 1], &rows[hi]);
                let w = (epoch_s - a.epoch_s) / (b.epoch_s - a.epoch_s);
                let lerp = |p: EcefVector, q: EcefVector| p * (1.0 - w) + q * w;
                Ok(EcefStateVector::new(
                    lerp(a.state.position, b.state.position),
                    lerp(a.state.velocity, b.state.velocity),
                ))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Trajectory::Circular(o) => o.validate(),
            Trajectory::Table(rows) => {
                if rows.is_empty() {
                    return Err(invalid("empty state table"));
                }
                if rows.windows(2).any(|w| w[1].epoch_s <= w[0].epoch_s) {
                    return Err(invalid("state table epochs must be strictly increasing"));
                }
                rows.iter().try_for_each(|r| r.state.validate())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverDef {
    pub name: String,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureTiming {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub center_freq_hz: f64,
    pub snapshot_count: usize,
    pub snapshot_spacing_s: f64,
    pub first_epoch_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub seed: u64,
    /// Per-sample complex noise variance; also the SNR reference.
    pub power: f64,
    pub enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            seed: 0,
            power: 1.0,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bounds: GridBounds,
    pub spacing_deg: f64,
    pub altitude_m: f64,
    pub max_points: u64,
}

impl GridSpec {
    pub fn new(bounds: GridBounds, spacing_deg: f64) -> Self {
        Self {
            bounds,
            spacing_deg,
            altitude_m: 0.0,
            max_points: DEFAULT_MAX_GRID_POINTS,
        }
    }

    pub fn build(&self) -> Result<CandidateGrid> {
        build_candidate_grid_capped(&self.bounds, self.spacing_deg, self.altitude_m, self.max_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub receivers: Vec<ReceiverDef>,
    pub emitters: Vec<EmitterDef>,
    pub timing: CaptureTiming,
    pub noise: NoiseModel,
    pub grid: GridSpec,
    pub detection: DetectionParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let t = &self.timing;
        if self.receivers.len() < 2 {
            return Err(invalid("a scenario needs at least two receivers"));
        }
        if t.snapshot_count == 0 {
            return Err(invalid("snapshot_count must be >= 1"));
        }
        if !(t.duration_s > 0.0 && t.duration_s <= MAX_CAPTURE_DURATION_S) {
            return Err(invalid(format!(
                "capture duration {} s outside (0, {MAX_CAPTURE_DURATION_S}]",
                t.duration_s
            )));
        }
        if !(t.center_freq_hz.is_finite() && t.center_freq_hz > 0.0) {
            return Err(invalid("center frequency must be > 0"));
        }
        if !(t.snapshot_spacing_s.is_finite() && t.snapshot_spacing_s >= 0.0) {
            return Err(invalid("snapshot spacing must be >= 0"));
        }
        if !t.first_epoch_s.is_finite() {
            return Err(invalid("first epoch must be finite"));
        }
        samples_for(t.sample_rate_hz, t.duration_s)?;
        if !(self.noise.power.is_finite() && self.noise.power > 0.0) {
            return Err(invalid("noise power must be > 0"));
        }
        for r in &self.receivers {
            r.trajectory.validate()?;
        }
        for e in &self.emitters {
            e.validate(t.sample_rate_hz)?;
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::for_carrier(self.timing.center_freq_hz)
    }

    pub fn samples_per_capture(&self) -> usize {
        samples_for(self.timing.sample_rate_hz, self.timing.duration_s).unwrap_or(0)
    }

    pub fn snapshot_epoch(&self, index: usize) -> f64 {
        self.timing.first_epoch_s + index as f64 * self.timing.snapshot_spacing_s
    }

    pub fn receiver_states(&self, epoch_s: f64) -> Result<Vec<EcefStateVector>> {
        self.receivers
            .iter()
            .map(|r| {
                let s = r.trajectory.state_at(epoch_s)?;
                s.validate()?;
                Ok(s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverCapture {
    pub name: String,
    pub state: EcefStateVector,
    pub capture: BasebandCapture,
}

/// Simultaneous captures of all receivers at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub epoch_s: f64,
    pub receivers: Vec<ReceiverCapture>,
}

impl Snapshot {
    pub fn validate(&self) -> Result<()> {
        if self.receivers.len() < 2 {
            return Err(invalid("a snapshot needs at least two receivers"));
        }
        let first = &self.receivers[0].capture;
        for r in &self.receivers[1..] {
            let c = &r.capture;
            if c.sample_rate_hz != first.sample_rate_hz
                || c.len() != first.len()
                || c.start_time_s != first.start_time_s
            {
                return Err(Error::CaptureMismatch(format!(
                    "receiver {} capture differs in rate, length or epoch",
                    r.name
                )));
            }
        }
        Ok(())
    }
}

/// A rendered transmit waveform and its spectrum, for fractional delays.
#[derive(Debug, Clone)]
pub struct TransmitBuffer {
    pub capture: BasebandCapture,
    spectrum: Vec<Complex64>,
}

impl TransmitBuffer {
    pub fn new(capture: BasebandCapture) -> Self {
        let mut spectrum = capture.samples.clone();
        FftPlanner::new()
            .plan_fft_forward(spectrum.len())
            .process(&mut spectrum);
        Self { capture, spectrum }
    }

    pub fn render(
        waveform: &WaveformSpec,
        sample_rate_hz: f64,
        start_s: f64,
        n: usize,
        center_freq_hz: f64,
    ) -> Result<Self> {
        let samples = waveform.render(sample_rate_hz, start_s, n)?;
        Ok(Self::new(BasebandCapture::new(
            samples,
            sample_rate_hz,
            start_s,
            center_freq_hz,
        )?))
    }

    /// Buffer advanced by `frac` of a sample (band-limited, circular).
    fn advanced(&self, frac: f64) -> Vec<Complex64> {
        if frac == 0.0 {
            return self.capture.samples.clone();
        }
        let m = self.spectrum.len();
        let half = m / 2;
        let mut shifted: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if m.is_multiple_of(2) && i == half {
                    x * (std::f64::consts::PI * frac).cos()
                } else {
                    let signed = if i > half { i as f64 - m as f64 } else { i as f64 };
                    x * Complex64::from_polar(1.0, TAU * signed * frac / m as f64)
                }
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(m).process(&mut shifted);
        let scale = 1.0 / m as f64;
        shifted.iter_mut().for_each(|s| *s *= scale);
        shifted
    }
}

/// Smallest 2^a 3^b 5^c not below `n`.
fn fft_friendly_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// One emitter as seen by one receiver over `n` samples from `epoch_s`:
/// `A * x(t - tau) * exp(j 2 pi f t)` with capture-local `t`.
pub fn synthesize_received(
    emitter: &EmitterDef,
    rx: &EcefStateVector,
    transmit: &TransmitBuffer,
    epoch_s: f64,
    n: usize,
    noise_power: f64,
) -> Result<BasebandCapture> {
    let tx = &transmit.capture;
    let fs = tx.sample_rate_hz;
    let wavelength = PhysicalConstants::for_carrier(tx.center_freq_hz).wavelength_m();
    let geo = predict_geometry(&emitter.position(), rx, wavelength)?;
    let amplitude = emitter.amplitude_at(geo.range_m, noise_power);

    let offset = (epoch_s - geo.delay_s - tx.start_time_s) * fs;
    let whole = offset.floor();
    let frac = offset - whole;
    let guard = TRANSMIT_GUARD_SAMPLES as f64;
    if whole < guard || whole + n as f64 + guard > tx.len() as f64 {
        return Err(Error::BufferTooShort(format!(
            "delay {:.6} s needs samples {}..{} of a {}-sample buffer with {} guard samples",
            geo.delay_s,
            whole,
            whole + n as f64,
            tx.len(),
            TRANSMIT_GUARD_SAMPLES
        )));
    }
    let start = whole as usize;
    let delayed = transmit.advanced(frac);
    let step = geo.doppler_hz / fs;
    let samples = delayed[start..start + n]
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let cycles = step * k as f64;
            x * Complex64::from_polar(amplitude, TAU * (cycles - cycles.floor()))
        })
        .collect();
    BasebandCapture::new(samples, fs, epoch_s, tx.center_freq_hz)
}

/// Complex white Gaussian noise of variance `power` for one capture.
pub fn noise_samples(noise_seed: u64, snapshot: usize, receiver: usize, n: usize, power: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(noise_seed, &[snapshot as u64, receiver as u64]));
    let sigma = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

/// Synthesizes every receiver's capture at snapshot `index`.
pub fn simulate_snapshot(sc: &Scenario, index: usize) -> Result<Snapshot> {
    let t = &sc.timing;
    let fs = t.sample_rate_hz;
    let n = samples_for(fs, t.duration_s)?;
    let epoch = sc.snapshot_epoch(index);
    let states = sc.receiver_states(epoch)?;
    let wavelength = sc.constants().wavelength_m();
    let mut sums = vec![vec![Complex64::new(0.0, 0.0); n]; states.len()];

    for emitter in &sc.emitters {
        let pos = emitter.position();
        let delays = states
            .iter()
            .map(|s| predict_geometry(&pos, s, wavelength).map(|g| g.delay_s))
            .collect::<Result<Vec<_>>>()?;
        let max_delay = delays.iter().cloned().fold(f64::MIN, f64::max);
        let min_delay = delays.iter().cloned().fold(f64::MAX, f64::min);
        let guard = TRANSMIT_GUARD_SAMPLES as f64;
        let start = epoch - max_delay - (guard + 1.0) / fs;
        let needed = ((max_delay - min_delay) * fs).ceil() as usize + n + 2 * TRANSMIT_GUARD_SAMPLES + 4;
        let tx = TransmitBuffer::render(&emitter.waveform, fs, start, fft_friendly_len(needed), t.center_freq_hz)?;
        for (sum, state) in sums.iter_mut().zip(&states) {
            let rx = synthesize_received(emitter, state, &tx, epoch, n, sc.noise.power)?;
            for (a, b) in sum.iter_mut().zip(&rx.samples) {
                *a += b;
            }
        }
    }

    let mut receivers = Vec::with_capacity(states.len());
    for (r, (mut samples, state)) in sums.into_iter().zip(states).enumerate() {
        if sc.noise.enabled {
            let noise = noise_samples(sc.noise.seed, index, r, n, sc.noise.power);
            for (s, w) in samples.iter_mut().zip(noise) {
                *s += w;
            }
        }
        receivers.push(ReceiverCapture {
            name: sc.receivers[r].name.clone(),
            state,
            capture: BasebandCapture::new(samples, fs, epoch, t.center_freq_hz)?,
        });
    }
    Ok(Snapshot {
        index,
        epoch_s: epoch,
        receivers,
    })
}

/// All snapshots of a scenario; snapshots are generated concurrently and
/// the output does not depend on scheduling.
pub fn simulate_scenario(sc: &Scenario) -> Result<Vec<Snapshot>> {
    sc.validate()?;
    (0..sc.timing.snapshot_count)
        .into_par_iter()
        .map(|i| simulate_snapshot(sc, i))
        .collect()
}
