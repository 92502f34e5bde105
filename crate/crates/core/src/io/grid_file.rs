//! Correlation grid files (CSV and DGGR binary) and detection lists.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{Axis, CandidateGrid};
use crate::geoloc::{CorrelationGrid, EmitterEstimate};

pub const GRID_MAGIC: &[u8; 4] = b"DGGR";
pub const GRID_VERSION: u16 = 1;
const GRID_HEADER_BYTES: usize = 4 + 2 + 8 * 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridFormat {
    Csv,
    Binary,
}

impl GridFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            GridFormat::Csv => "csv",
            GridFormat::Binary => "dggr",
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn grid_to_csv(grid: &CorrelationGrid) -> String {
    let mut s = String::with_capacity(grid.len() * 72 + 32);
    s.push_str("lat_deg,lon_deg,value\n");
    for (i, v) in grid.values.iter().enumerate() {
        let g = grid.grid.geodetic(i);
        let _ = writeln!(s, "{},{},{}", g17(g.lat_deg), g17(g.lon_deg), g17(*v));
    }
    s
}

/// Parses rows written by [`grid_to_csv`] as `(lat, lon, value)`.
pub fn parse_grid_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("lat_deg,lon_deg,value") => {}
        other => return Err(Error::Format(format!("unexpected grid CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("grid CSV row {}: {e}", i + 2)))
            };
            if f.len() != 3 {
                return Err(Error::Format(format!("grid CSV row {} has {} fields", i + 2, f.len())));
            }
            Ok((num(f[0])?, num(f[1])?, num(f[2])?))
        })
        .collect()
}

pub fn encode_grid(grid: &CorrelationGrid) -> Vec<u8> {
    let g = &grid.grid;
    let mut out = Vec::with_capacity(GRID_HEADER_BYTES + 8 * grid.len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    for axis in [&g.lat, &g.lon] {
        out.extend_from_slice(&axis.start.to_le_bytes());
        out.extend_from_slice(&axis.step.to_le_bytes());
        out.extend_from_slice(&(axis.count as u64).to_le_bytes());
    }
    out.extend_from_slice(&g.altitude_m.to_le_bytes());
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<CorrelationGrid> {
    if bytes.len() < GRID_HEADER_BYTES || &bytes[..4] != GRID_MAGIC {
        return Err(Error::Format("not a DGGR grid file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != GRID_VERSION {
        return Err(Error::Format(format!("unsupported grid version {version}")));
    }
    let word = |k: usize| -> [u8; 8] { bytes[6 + 8 * k..14 + 8 * k].try_into().unwrap() };
    let axis = |k: usize| Axis {
        start: f64::from_le_bytes(word(k)),
        step: f64::from_le_bytes(word(k + 1)),
        count: u64::from_le_bytes(word(k + 2)) as usize,
    };
    let (lat, lon) = (axis(0), axis(3));
    let altitude = f64::from_le_bytes(word(6));
    let payload = &bytes[GRID_HEADER_BYTES..];
    let expected = lat.count.checked_mul(lon.count).and_then(|n| n.checked_mul(8));
    if expected != Some(payload.len()) {
        return Err(Error::Format(format!(
            "grid header declares {}x{} values but payload holds {} bytes",
            lat.count,
            lon.count,
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    CorrelationGrid::new(Arc::new(CandidateGrid::from_axes(lat, lon, altitude)?), values)
}

pub fn write_grid(grid: &CorrelationGrid, path: impl AsRef<Path>, format: GridFormat) -> Result<()> {
    match format {
        GridFormat::Csv => fs::write(path, grid_to_csv(grid))?,
        GridFormat::Binary => fs::write(path, encode_grid(grid))?,
    }
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<CorrelationGrid> {
    decode_grid(&fs::read(path)?)
}

pub fn detections_to_csv(detections: &[EmitterEstimate]) -> String {
    let mut s = String::from("rank,lat_deg,lon_deg,alt_m,lat_idx,lon_idx,score,score_zsigma\n");
    for (rank, d) in detections.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            rank + 1,
            g17(d.location.lat_deg),
            g17(d.location.lon_deg),
            g17(d.location.alt_m),
            d.lat_idx,
            d.lon_idx,
            g17(d.score),
            g17(d.score_zsigma)
        );
    }
    s
}

pub fn write_detections(detections: &[EmitterEstimate], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, detections_to_csv(detections))?;
    Ok(())
}

/// Parses a detections CSV into `(lat, lon, score)` rows.
pub fn parse_detections_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Format(format!("detection row has {} fields", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
            Ok((num(f[1])?, num(f[2])?, num(f[6])?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoloc::detect_emitters;

    fn grid2x2() -> CorrelationGrid {
        let g = Arc::new(
            CandidateGrid::from_axes(
                Axis { start: 10.0, step: 0.5, count: 2 },
                Axis { start: 20.0, step: 0.5, count: 2 },
                0.0,
            )
            .unwrap(),
        );
        CorrelationGrid::new(g, vec![1.0, 2.5, 1.0 / 3.0, 1e-300]).unwrap()
    }

    #[test]
    fn csv_has_header_and_one_row_per_cell() {
        let csv = grid_to_csv(&grid2x2());
        assert_eq!(csv.lines().count(), 5);
        let rows = parse_grid_csv(&csv).unwrap();
        assert_eq!(rows[1], (10.0, 20.5, 2.5));
        for (row, v) in rows.iter().zip(&grid2x2().values) {
            assert!((row.2 - v).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn binary_round_trip_exact() {
        let g = grid2x2();
        let back = decode_grid(&encode_grid(&g)).unwrap();
        assert_eq!(back.values, g.values);
        assert!(back.grid.same_lattice(&g.grid));
        let b = encode_grid(&g);
        assert!(decode_grid(&b[..b.len() - 8]).is_err());
    }

    #[test]
    fn detections_round_trip() {
        let g = grid2x2();
        let mut v = vec![0.0; 4];
        v[2] = 10.0;
        let cg = CorrelationGrid::new(g.grid.clone(), v).unwrap();
        let det = detect_emitters(&cg, 1.0, 0).unwrap();
        let rows = parse_detections_csv(&detections_to_csv(&det)).unwrap();
        assert_eq!(rows, vec![(10.5, 20.0, 10.0)]);
    }
}
