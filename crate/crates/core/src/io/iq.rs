//! DGIQ complex-baseband container.
//!
//! Layout, all little-endian: `"DGIQ"`, version `u16`, sample rate `f64`,
//! center frequency `f64`, start time `f64`, sample count `u64`, then
//! interleaved `(I, Q)` pairs as `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::waveform::BasebandCapture;

pub const IQ_MAGIC: &[u8; 4] = b"DGIQ";
pub const IQ_VERSION: u16 = 1;
pub const IQ_HEADER_BYTES: usize = 4 + 2 + 8 * 4;

pub fn encode_iq(capture: &BasebandCapture) -> Vec<u8> {
    let mut out = Vec::with_capacity(IQ_HEADER_BYTES + 8 * capture.len());
    out.extend_from_slice(IQ_MAGIC);
    out.extend_from_slice(&IQ_VERSION.to_le_bytes());
    out.extend_from_slice(&capture.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&capture.center_freq_hz.to_le_bytes());
    out.extend_from_slice(&capture.start_time_s.to_le_bytes());
    out.extend_from_slice(&(capture.len() as u64).to_le_bytes());
    for s in &capture.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_iq(bytes: &[u8]) -> Result<BasebandCapture> {
    if bytes.len() < IQ_HEADER_BYTES {
        return Err(Error::Format(format!(
            "IQ file has {} bytes, shorter than the {IQ_HEADER_BYTES}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != IQ_MAGIC {
        return Err(Error::Format("bad IQ magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != IQ_VERSION {
        return Err(Error::Format(format!("unsupported IQ version {version}")));
    }
    let fs = f64_at(bytes, 6);
    let fc = f64_at(bytes, 14);
    let start = f64_at(bytes, 22);
    let count = u64::from_le_bytes(bytes[30..38].try_into().unwrap());
    let payload = &bytes[IQ_HEADER_BYTES..];
    if Some(payload.len() as u64) != count.checked_mul(8) {
        return Err(Error::Format(format!(
            "IQ header declares {count} samples but payload holds {} bytes",
            payload.len()
        )));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    BasebandCapture::new(samples, fs, start, fc)
}

pub fn write_iq(capture: &BasebandCapture, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_iq(capture))?;
    w.flush()?;
    Ok(())
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<BasebandCapture> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_iq(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cap(samples: Vec<Complex64>) -> BasebandCapture {
        BasebandCapture::new(samples, 2.048e6, 12.5, 1575.42e6).unwrap()
    }

    #[test]
    fn four_sample_layout() {
        let c = cap(vec![
            Complex64::new(1.0, -1.0),
            Complex64::new(0.5, 0.25),
            Complex64::new(0.0, 2.0),
            Complex64::new(-3.0, 0.0),
        ]);
        let b = encode_iq(&c);
        assert_eq!(b.len(), 38 + 32);
        assert_eq!(&b[..4], b"DGIQ");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..14], &2.048e6f64.to_le_bytes());
        assert_eq!(&b[14..22], &1575.42e6f64.to_le_bytes());
        assert_eq!(&b[22..30], &12.5f64.to_le_bytes());
        assert_eq!(&b[30..38], &[4, 0, 0, 0, 0, 0, 0, 0]);
        // 1.0f32 = 0x3f800000, -1.0f32 = 0xbf800000
        assert_eq!(&b[38..46], &[0, 0, 0x80, 0x3f, 0, 0, 0x80, 0xbf]);
        assert_eq!(decode_iq(&b).unwrap(), c);
    }

    #[test]
    fn million_sample_round_trip_is_byte_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<Complex64> = (0..1_000_000)
            .map(|_| Complex64::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.dgiq");
        write_iq(&cap(samples), &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = read_iq(&path).unwrap();
        let again = dir.path().join("y.dgiq");
        write_iq(&back, &again).unwrap();
        assert_eq!(first, std::fs::read(&again).unwrap());
    }

    #[test]
    fn malformed_files_rejected() {
        let b = encode_iq(&cap(vec![Complex64::new(1.0, 0.0); 3]));
        assert!(decode_iq(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode_iq(&bad).is_err());
        let mut wrong_count = b.clone();
        wrong_count[30] = 5;
        assert!(decode_iq(&wrong_count).is_err());
        assert!(decode_iq(&b[..10]).is_err());
    }
}
