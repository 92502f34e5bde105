//! Delay, Doppler and pair-difference predictions for a candidate point.

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::geodesy::EcefVector;
use crate::scene::EcefStateVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryPrediction {
    pub range_m: f64,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// Unit vector from the candidate toward the receiver.
    pub unit_range: EcefVector,
}

/// Range, delay and Doppler seen by `rx` from a stationary emitter at
/// `candidate`. Doppler is `-(r_hat . v) / wavelength`, positive when closing.
pub fn predict_geometry(
    candidate: &EcefVector,
    rx: &EcefStateVector,
    wavelength_m: f64,
) -> Result<GeometryPrediction> {
    let r = rx.position - *candidate;
    let range_m = r.norm();
    if range_m == 0.0 || !range_m.is_finite() {
        return Err(Error::Degenerate(
            "candidate coincides with the receiver position".into(),
        ));
    }
    let unit_range = r * (1.0 / range_m);
    Ok(GeometryPrediction {
        range_m,
        delay_s: range_m / SPEED_OF_LIGHT,
        doppler_hz: -unit_range.dot(&rx.velocity) / wavelength_m,
        unit_range,
    })
}

/// Expected TDOA (whole samples) and FDOA (Hz) of receiver `j` relative to `i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[repr(C)]
pub struct PairOffsets {
    pub tdoa_samples: i64,
    pub fdoa_hz: f64,
}

/// Converts a delay difference to whole samples, ties away from zero.
pub fn tdoa_to_samples(tdoa_s: f64, sample_rate_hz: f64) -> i64 {
    (tdoa_s * sample_rate_hz).round() as i64
}

pub fn predict_pair_offsets(
    candidate: &EcefVector,
    si: &EcefStateVector,
    sj: &EcefStateVector,
    sample_rate_hz: f64,
    wavelength_m: f64,
) -> Result<PairOffsets> {
    let gi = predict_geometry(candidate, si, wavelength_m)?;
    let gj = predict_geometry(candidate, sj, wavelength_m)?;
    Ok(PairOffsets {
        tdoa_samples: tdoa_to_samples(gj.delay_s - gi.delay_s, sample_rate_hz),
        fdoa_hz: gj.doppler_hz - gi.doppler_hz,
    })
}
