//! Averaged-periodogram PSD and short-time spectra (Hann window).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::BasebandCapture;
use crate::error::{invalid, Result};

/// Two-sided power spectral density, bins ordered from -fs/2 upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub freqs_hz: Vec<f64>,
    /// Power per hertz.
    pub density: Vec<f64>,
    pub bin_width_hz: f64,
    pub segments: usize,
}

impl PowerSpectrum {
    /// Integral of the density over all bins.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz
    }

    pub fn power_in_band(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .map(|(_, d)| d)
            .sum::<f64>()
            * self.bin_width_hz
    }

    pub fn peak_frequency_hz(&self) -> f64 {
        let (i, _) = argmax(&self.density);
        self.freqs_hz[i]
    }
}

/// Magnitudes per column (time) and bin (frequency, -fs/2 upward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub freqs_hz: Vec<f64>,
    /// Capture-local time at the center of each column.
    pub times_s: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn peak_frequencies_hz(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| self.freqs_hz[argmax(c).0])
            .collect()
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
}

pub(crate) fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    // periodic form, so 50% overlapped windows sum to a constant
    (0..len)
        .map(|n| 0.5 - 0.5 * (TAU * n as f64 / len as f64).cos())
        .collect()
}

fn shifted_freqs(len: usize, sample_rate_hz: f64) -> Vec<f64> {
    let half = len / 2;
    (0..len)
        .map(|i| (i as f64 - half as f64) * sample_rate_hz / len as f64)
        .collect()
}

/// Moves the zero-frequency bin to the middle.
fn fftshift<T: Copy>(v: &[T]) -> Vec<T> {
    let half = v.len() / 2;
    let split = v.len() - half;
    v[split..].iter().chain(&v[..split]).copied().collect()
}

/// Welch estimate with `segment_len` Hann segments at 50% overlap.
pub fn estimate_psd(capture: &BasebandCapture, segment_len: usize) -> Result<PowerSpectrum> {
    let n = capture.len();
    if n == 0 {
        return Err(invalid("cannot estimate the PSD of an empty capture"));
    }
    if segment_len == 0 || segment_len > n {
        return Err(invalid(format!(
            "segment length {segment_len} must be in 1..={n}"
        )));
    }
    let fs = capture.sample_rate_hz;
    let window = hann(segment_len);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let hop = (segment_len / 2).max(1);
    let fft = FftPlanner::new().plan_fft_forward(segment_len);

    let mut acc = vec![0.0; segment_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut segments = 0;
    let mut start = 0;
    while start + segment_len <= n {
        for ((b, s), w) in buf
            .iter_mut()
            .zip(&capture.samples[start..start + segment_len])
            .zip(&window)
        {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (fs * window_energy * segments as f64);
    let density: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    Ok(PowerSpectrum {
        freqs_hz: shifted_freqs(segment_len, fs),
        density: fftshift(&density),
        bin_width_hz: fs / segment_len as f64,
        segments,
    })
}

/// Short-time Fourier magnitudes with a Hann window.
pub fn compute_spectrogram(
    capture: &BasebandCapture,
    window_len: usize,
    hop: usize,
) -> Result<Spectrogram> {
    let n = capture.len();
    if n == 0 {
        return Err(invalid("cannot compute the spectrogram of an empty capture"));
    }
    if window_len == 0 || window_len > n {
        return Err(invalid(format!("window length {window_len} must be in 1..={n}")));
    }
    if hop == 0 {
        return Err(invalid("spectrogram hop must be >= 1"));
    }
    let fs = capture.sample_rate_hz;
    let window = hann(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let count = (n - window_len) / hop + 1;
    let mut columns = Vec::with_capacity(count);
    let mut times_s = Vec::with_capacity(count);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for c in 0..count {
        let start = c * hop;
        for ((b, s), w) in buf
            .iter_mut()
            .zip(&capture.samples[start..start + window_len])
            .zip(&window)
        {
            *b = s * w;
        }
        fft.process(&mut buf);
        let mags: Vec<f64> = buf.iter().map(|b| b.norm()).collect();
        columns.push(fftshift(&mags));
        times_s.push((start as f64 + window_len as f64 / 2.0) / fs);
    }
    Ok(Spectrogram {
        freqs_hz: shifted_freqs(window_len, fs),
        times_s,
        columns,
    })
}
