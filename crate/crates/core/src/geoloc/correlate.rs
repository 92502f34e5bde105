//! Position-domain correlation of one receiver pair at one candidate.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::geometry::PairOffsets;
use crate::error::{Error, Result};
use crate::waveform::BasebandCapture;

/// Samples between exact re-evaluations of the FDOA phasor.
const REANCHOR_INTERVAL: usize = 256;

/// `|sum_k y1[k] * conj(y2[k + tdoa]) * exp(j 2 pi fdoa k / fs)|` over the
/// overlap of the two records; shifted indices outside `y2` contribute zero.
///
/// The phasor is advanced by recurrence and re-anchored every
/// [`REANCHOR_INTERVAL`] samples, so the reduction order is fixed and the
/// result depends only on the inputs.
pub fn correlate_samples(
    y1: &[Complex64],
    y2: &[Complex64],
    tdoa_samples: i64,
    fdoa_hz: f64,
    sample_rate_hz: f64,
) -> f64 {
    let n = y1.len().min(y2.len()) as i64;
    let k_start = (-tdoa_samples).max(0);
    let k_end = (n - tdoa_samples).min(n);
    if k_start >= k_end {
        return 0.0;
    }
    let cycles_per_sample = fdoa_hz / sample_rate_hz;
    let step = Complex64::from_polar(1.0, TAU * cycles_per_sample.fract());

    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = k_start as usize;
    let end = k_end as usize;
    let shift = tdoa_samples as isize;
    while k < end {
        let block_end = (k + REANCHOR_INTERVAL).min(end);
        let cycles = cycles_per_sample * k as f64;
        let mut phasor = Complex64::from_polar(1.0, TAU * (cycles - cycles.floor()));
        let mut block = Complex64::new(0.0, 0.0);
        let a = &y1[k..block_end];
        let b0 = (k as isize + shift) as usize;
        let b = &y2[b0..b0 + a.len()];
        for (s1, s2) in a.iter().zip(b) {
            block += s1 * s2.conj() * phasor;
            phasor *= step;
        }
        acc += block;
        k = block_end;
    }
    acc.norm()
}

/// Checks that two captures can be correlated against each other.
pub fn check_pair(y1: &BasebandCapture, y2: &BasebandCapture) -> Result<()> {
    if y1.sample_rate_hz != y2.sample_rate_hz {
        return Err(Error::CaptureMismatch(format!(
            "sample rates differ: {} vs {} Hz",
            y1.sample_rate_hz, y2.sample_rate_hz
        )));
    }
    if y1.len() != y2.len() {
        return Err(Error::CaptureMismatch(format!(
            "sample counts differ: {} vs {}",
            y1.len(),
            y2.len()
        )));
    }
    Ok(())
}

pub fn correlate_point(
    y1: &BasebandCapture,
    y2: &BasebandCapture,
    offsets: &PairOffsets,
) -> Result<f64> {
    check_pair(y1, y2)?;
    Ok(correlate_samples(
        &y1.samples,
        &y2.samples,
        offsets.tdoa_samples,
        offsets.fdoa_hz,
        y1.sample_rate_hz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn capture(samples: Vec<Complex64>, fs: f64) -> BasebandCapture {
        BasebandCapture::new(samples, fs, 0.0, 0.0).unwrap()
    }

    fn random_samples(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn coherent_ones() {
        let y = capture(vec![Complex64::new(1.0, 0.0); 1000], 1e3);
        let s = correlate_point(&y, &y, &PairOffsets::default()).unwrap();
        assert!((s - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn full_period_rotation_cancels() {
        let n = 1000;
        let fs = 2e3;
        let y = capture(vec![Complex64::new(1.0, 0.0); n], fs);
        for m in [1, 2, -3, 7] {
            let off = PairOffsets {
                tdoa_samples: 0,
                fdoa_hz: m as f64 * fs / n as f64,
            };
            assert!(correlate_point(&y, &y, &off).unwrap() < 1e-9);
        }
    }

    #[test]
    fn truncated_overlap() {
        let y = capture(vec![Complex64::new(1.0, 0.0); 100], 1.0);
        for d in [-99i64, -10, 0, 10, 99] {
            let off = PairOffsets {
                tdoa_samples: d,
                fdoa_hz: 0.0,
            };
            let s = correlate_point(&y, &y, &off).unwrap();
            assert!((s - (100 - d.abs()) as f64).abs() < 1e-9);
        }
        for d in [-100i64, 100, 1000] {
            let off = PairOffsets {
                tdoa_samples: d,
                fdoa_hz: 0.0,
            };
            assert_eq!(correlate_point(&y, &y, &off).unwrap(), 0.0);
        }
    }

    #[test]
    fn mismatched_captures() {
        let a = capture(vec![Complex64::new(1.0, 0.0); 10], 1.0);
        let b = capture(vec![Complex64::new(1.0, 0.0); 11], 1.0);
        let c = capture(vec![Complex64::new(1.0, 0.0); 10], 2.0);
        assert!(correlate_point(&a, &b, &PairOffsets::default()).is_err());
        assert!(correlate_point(&a, &c, &PairOffsets::default()).is_err());
    }

    #[test]
    fn shift_aligns_delayed_copy() {
        let x = random_samples(600, 1);
        let d = 37;
        let y1: Vec<_> = x[d..d + 500].to_vec();
        let y2: Vec<_> = x[..500].to_vec();
        // y1[k] = y2[k + d]
        let peak = correlate_samples(&y1, &y2, d as i64, 0.0, 1.0);
        let energy: f64 = y1[..500 - d].iter().map(|s| s.norm_sqr()).sum();
        assert!((peak - energy).abs() < 1e-9 * energy);
        assert!(correlate_samples(&y1, &y2, 0, 0.0, 1.0) < 0.3 * energy);
    }

    proptest! {
        #[test]
        fn unit_phase_invariance_and_homogeneity(
            seed in 0u64..1000,
            theta in 0.0f64..std::f64::consts::TAU,
            alpha in 0.1f64..10.0,
            d in -50i64..50,
            f in -2000.0f64..2000.0,
        ) {
            let fs = 10_000.0;
            let y1 = random_samples(400, seed);
            let y2 = random_samples(400, seed + 1);
            let base = correlate_samples(&y1, &y2, d, f, fs);
            let rot = Complex64::from_polar(1.0, theta);
            let r1: Vec<_> = y1.iter().map(|s| s * rot).collect();
            let r2: Vec<_> = y2.iter().map(|s| s * rot).collect();
            let rotated = correlate_samples(&r1, &r2, d, f, fs);
            prop_assert!((rotated - base).abs() <= 1e-9 * base.max(1.0));
            let scaled: Vec<_> = y1.iter().map(|s| s * alpha).collect();
            let s = correlate_samples(&scaled, &y2, d, f, fs);
            prop_assert!((s - alpha * base).abs() <= 1e-9 * (alpha * base).max(1.0));
        }
    }
}
