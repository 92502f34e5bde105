//! 16-bit binary graymaps (`P5`, maxval 65535, big-endian samples as the
//! PGM format requires).

use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::geoloc::CorrelationGrid;
use crate::waveform::spectral::{PowerSpectrum, Spectrogram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top of the image.
    pub pixels: Vec<u16>,
}

impl Graymap {
    /// Linear min→0, max→65535 scaling of row-major `values`; a constant
    /// input maps to an all-zero image.
    pub fn from_values(values: &[f64], width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(invalid(format!(
                "{} values do not fill a {width}x{height} image",
                values.len()
            )));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("image values must be finite"));
        }
        let span = hi - lo;
        let pixels = values
            .iter()
            .map(|v| {
                if span > 0.0 {
                    ((v - lo) / span * 65535.0).round() as u16
                } else {
                    0
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(2 * self.pixels.len());
        for p in &self.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::Format("not a 16-bit P5 graymap".into());
        // header: magic, width, height, maxval separated by single whitespace runs
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
        }
        pos += 1;
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        if fields[0] != "P5" || num(fields[3])? != 65535 {
            return Err(bad());
        }
        let (width, height) = (num(fields[1])?, num(fields[2])?);
        let body = bytes.get(pos..).ok_or_else(bad)?;
        if body.len() != 2 * width * height {
            return Err(bad());
        }
        let pixels = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

/// Heatmap of a correlation grid: width = longitude count, row 0 = the
/// northernmost latitude.
pub fn grid_heatmap(grid: &CorrelationGrid) -> Result<Graymap> {
    if grid.is_empty() {
        return Err(invalid("cannot render an empty grid"));
    }
    let (rows, cols) = grid.grid.shape();
    let mut flipped = Vec::with_capacity(grid.len());
    for r in (0..rows).rev() {
        flipped.extend_from_slice(&grid.values[r * cols..(r + 1) * cols]);
    }
    Graymap::from_values(&flipped, cols, rows)
}

pub fn render_heatmap(grid: &CorrelationGrid, path: impl AsRef<Path>) -> Result<()> {
    grid_heatmap(grid)?.write(path)
}

fn db(v: f64, floor: f64) -> f64 {
    10.0 * v.max(floor).log10()
}

/// Spectrogram in dB: time runs left to right, highest frequency on top.
pub fn spectrogram_image(s: &Spectrogram) -> Result<Graymap> {
    let cols = s.columns.len();
    let rows = s.freqs_hz.len();
    let peak = s.columns.iter().flatten().cloned().fold(0.0, f64::max);
    let floor = (peak * 1e-4).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(rows * cols);
    for r in (0..rows).rev() {
        for col in &s.columns {
            // columns hold magnitudes, hence 20 log10
            values.push(2.0 * db(col[r], floor));
        }
    }
    Graymap::from_values(&values, cols, rows)
}

/// PSD in dB drawn as a filled curve, `height` pixels tall.
pub fn psd_image(p: &PowerSpectrum, height: usize) -> Result<Graymap> {
    let peak = p.density.iter().cloned().fold(0.0, f64::max);
    let floor = (peak * 1e-8).max(f64::MIN_POSITIVE);
    let levels: Vec<f64> = p.density.iter().map(|d| db(*d, floor)).collect();
    let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = levels.len();
    let mut values = vec![0.0; width * height];
    for (c, l) in levels.iter().enumerate() {
        let frac = if hi > lo { (l - lo) / (hi - lo) } else { 1.0 };
        let filled = (frac * (height - 1) as f64).round() as usize + 1;
        for r in height - filled..height {
            values[r * width + c] = 1.0;
        }
    }
    Graymap::from_values(&values, width, height)
}
