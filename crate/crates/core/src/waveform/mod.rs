//! Baseband interference waveforms and spectral estimators.
//!
//! Every generator is a pure function of its spec and the sampling clock, so
//! a waveform can be rendered starting at any time (including negative
//! times) and two renderings of overlapping spans agree sample for sample.

pub mod ca_code;
pub mod spectral;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed;

pub use ca_code::{generate_ca_code, ChipSequence, CHIP_RATE_HZ, CODE_LENGTH};
pub use spectral::{compute_spectrogram, estimate_psd, PowerSpectrum, Spectrogram};

/// Navigation data rate of the L1 C/A signal.
pub const NAV_BIT_RATE_HZ: f64 = 50.0;
/// Recommended minimum complex sample rate for the spoofer waveform.
pub const MIN_SPOOFER_RATE_HZ: f64 = 2.046e6;

/// Complex samples plus their clock.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandCapture {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Scenario time of sample 0.
    pub start_time_s: f64,
    pub center_freq_hz: f64,
}

impl BasebandCapture {
    pub fn new(
        samples: Vec<Complex64>,
        sample_rate_hz: f64,
        start_time_s: f64,
        center_freq_hz: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("capture has no samples"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid(format!("sample rate {sample_rate_hz} must be > 0")));
        }
        if !start_time_s.is_finite() || !center_freq_hz.is_finite() {
            return Err(invalid("capture epoch and center frequency must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            start_time_s,
            center_freq_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Capture-local time of sample `k` (zero at the first sample).
    pub fn local_time_s(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

/// GPS L1 C/A spoofer: seeded 50 bit/s data on the 1.023 Mcps code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpooferSpec {
    pub prn: u8,
    #[serde(default)]
    pub data_seed: u64,
    /// Additional PRN channels summed with the primary one.
    #[serde(default)]
    pub extra_prns: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneSpec {
    #[serde(default)]
    pub offset_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpSpec {
    pub bandwidth_hz: f64,
    pub period_s: f64,
}

/// Up-chirp followed by its conjugate; full period is twice `chirp_period_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SawtoothSpec {
    pub bandwidth_hz: f64,
    pub chirp_period_s: f64,
}

impl SawtoothSpec {
    pub fn full_period_s(&self) -> f64 {
        2.0 * self.chirp_period_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformSpec {
    Spoofer(SpooferSpec),
    Tone(ToneSpec),
    Chirp(ChirpSpec),
    Sawtooth(SawtoothSpec),
}

impl WaveformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WaveformSpec::Spoofer(_) => "spoofer",
            WaveformSpec::Tone(_) => "tone",
            WaveformSpec::Chirp(_) => "chirp",
            WaveformSpec::Sawtooth(_) => "sawtooth",
        }
    }

    /// Checks the spec against itself and against a sample rate.
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid(format!("sample rate {sample_rate_hz} must be > 0")));
        }
        match self {
            WaveformSpec::Spoofer(s) => {
                for prn in std::iter::once(&s.prn).chain(&s.extra_prns) {
                    if !(1..=32).contains(prn) {
                        return Err(invalid(format!("PRN {prn} outside 1..=32")));
                    }
                }
            }
            WaveformSpec::Tone(t) => {
                if !t.offset_hz.is_finite() || t.offset_hz.abs() >= sample_rate_hz / 2.0 {
                    return Err(invalid(format!(
                        "tone offset {} Hz beyond Nyquist for {} Hz sampling",
                        t.offset_hz, sample_rate_hz
                    )));
                }
            }
            WaveformSpec::Chirp(ChirpSpec {
                bandwidth_hz,
                period_s,
            })
            | WaveformSpec::Sawtooth(SawtoothSpec {
                bandwidth_hz,
                chirp_period_s: period_s,
            }) => {
                if !(bandwidth_hz.is_finite() && *bandwidth_hz > 0.0) {
                    return Err(invalid(format!("bandwidth {bandwidth_hz} must be > 0")));
                }
                if !(period_s.is_finite() && *period_s > 0.0) {
                    return Err(invalid(format!("chirp period {period_s} must be > 0")));
                }
                if *bandwidth_hz >= sample_rate_hz {
                    return Err(invalid(format!(
                        "bandwidth {bandwidth_hz} Hz not below sample rate {sample_rate_hz} Hz"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Renders `n` samples at times `start_s + k / sample_rate_hz`.
    pub fn render(&self, sample_rate_hz: f64, start_s: f64, n: usize) -> Result<Vec<Complex64>> {
        self.validate(sample_rate_hz)?;
        if !start_s.is_finite() {
            return Err(invalid("render start time must be finite"));
        }
        let out = match self {
            WaveformSpec::Spoofer(s) => render_spoofer(s, sample_rate_hz, start_s, n)?,
            WaveformSpec::Tone(t) => (0..n)
                .map(|k| {
                    let cycles = frac(t.offset_hz * start_s) + t.offset_hz * k as f64 / sample_rate_hz;
                    Complex64::from_polar(1.0, TAU * frac(cycles))
                })
                .collect(),
            WaveformSpec::Chirp(c) => (0..n)
                .map(|k| {
                    let u = sample_time(start_s, k, sample_rate_hz).rem_euclid(c.period_s);
                    chirp_sample(c.bandwidth_hz, c.period_s, u)
                })
                .collect(),
            WaveformSpec::Sawtooth(s) => (0..n)
                .map(|k| {
                    let u = sample_time(start_s, k, sample_rate_hz).rem_euclid(s.full_period_s());
                    if u < s.chirp_period_s {
                        chirp_sample(s.bandwidth_hz, s.chirp_period_s, u)
                    } else {
                        chirp_sample(s.bandwidth_hz, s.chirp_period_s, u - s.chirp_period_s).conj()
                    }
                })
                .collect(),
        };
        Ok(out)
    }

    /// Renders `duration_s` worth of samples starting at t = 0.
    pub fn generate(&self, sample_rate_hz: f64, duration_s: f64) -> Result<BasebandCapture> {
        let n = samples_for(sample_rate_hz, duration_s)?;
        let samples = self.render(sample_rate_hz, 0.0, n)?;
        BasebandCapture::new(samples, sample_rate_hz, 0.0, crate::constants::GPS_L1_HZ)
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn sample_time(start_s: f64, k: usize, sample_rate_hz: f64) -> f64 {
    start_s + k as f64 / sample_rate_hz
}

/// Number of samples covering `duration_s`.
pub fn samples_for(sample_rate_hz: f64, duration_s: f64) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(invalid(format!("duration {duration_s} must be > 0")));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(invalid(format!("sample rate {sample_rate_hz} must be > 0")));
    }
    let n = (duration_s * sample_rate_hz).round();
    if n < 1.0 {
        return Err(invalid("duration shorter than one sample"));
    }
    Ok(n as usize)
}

/// Linear-FM baseband sample at offset `u` into the sweep.
fn chirp_sample(bandwidth_hz: f64, period_s: f64, u: f64) -> Complex64 {
    let cycles = bandwidth_hz / (2.0 * period_s) * u * u - bandwidth_hz / 2.0 * u;
    Complex64::from_polar(1.0, TAU * frac(cycles))
}

fn nav_bit(data_seed: u64, prn: u8, bit_index: i64) -> f64 {
    if seed::derive(data_seed, &[prn as u64, bit_index as u64]) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn render_spoofer(
    spec: &SpooferSpec,
    sample_rate_hz: f64,
    start_s: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    let prns: Vec<u8> = std::iter::once(spec.prn)
        .chain(spec.extra_prns.iter().copied())
        .collect();
    let codes = prns
        .iter()
        .map(|&p| generate_ca_code(p))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / (prns.len() as f64).sqrt();
    let chips_per_sample = CHIP_RATE_HZ / sample_rate_hz;
    let start_chips = start_s * CHIP_RATE_HZ;
    let chips_per_bit = (CHIP_RATE_HZ / NAV_BIT_RATE_HZ).round() as i64;

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // exact for integer samples-per-chip ratios when start_s = 0
        let chip_phase = start_chips + (k as f64 * CHIP_RATE_HZ) / sample_rate_hz;
        let chip_abs = (chip_phase + 1e-9 * chips_per_sample).floor() as i64;
        let chip = chip_abs.rem_euclid(CODE_LENGTH as i64) as usize;
        // a nav bit spans exactly 20 code periods
        let bit_index = chip_abs.div_euclid(chips_per_bit);
        let mut acc = 0.0;
        for (p, code) in prns.iter().zip(&codes) {
            acc += nav_bit(spec.data_seed, *p, bit_index) * code.chips()[chip] as f64;
        }
        out.push(Complex64::new(acc * scale, 0.0));
    }
    Ok(out)
}

pub fn generate_spoofer(
    spec: &SpooferSpec,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<BasebandCapture> {
    WaveformSpec::Spoofer(spec.clone()).generate(sample_rate_hz, duration_s)
}

pub fn generate_tone(
    spec: &ToneSpec,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<BasebandCapture> {
    WaveformSpec::Tone(*spec).generate(sample_rate_hz, duration_s)
}

pub fn generate_chirp(
    spec: &ChirpSpec,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<BasebandCapture> {
    WaveformSpec::Chirp(*spec).generate(sample_rate_hz, duration_s)
}

pub fn generate_sawtooth(
    spec: &SawtoothSpec,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<BasebandCapture> {
    WaveformSpec::Sawtooth(*spec).generate(sample_rate_hz, duration_s)
}
