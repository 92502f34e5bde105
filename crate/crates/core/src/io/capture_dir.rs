//! A directory of per-snapshot, per-receiver DGIQ files plus a JSON
//! manifest carrying the receiver state vectors the files cannot hold.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::iq::{read_iq, write_iq};
use crate::error::{Error, Result};
use crate::geodesy::EcefVector;
use crate::scene::{EcefStateVector, ReceiverCapture, Snapshot};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestReceiver {
    pub name: String,
    pub file: String,
    pub position_m: [f64; 3],
    pub velocity_mps: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSnapshot {
    pub index: usize,
    pub epoch_s: f64,
    pub receivers: Vec<ManifestReceiver>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureManifest {
    pub version: u32,
    pub snapshots: Vec<ManifestSnapshot>,
}

fn arr(v: EcefVector) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn vec3(a: [f64; 3]) -> EcefVector {
    EcefVector::new(a[0], a[1], a[2])
}

pub fn snapshot_file_name(snapshot: usize, receiver: usize) -> String {
    format!("snap{snapshot:04}_rx{receiver}.dgiq")
}

/// Writes every capture and the manifest into `dir` (created if missing).
pub fn write_capture_dir(dir: impl AsRef<Path>, snapshots: &[Snapshot]) -> Result<CaptureManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = CaptureManifest {
        version: MANIFEST_VERSION,
        snapshots: Vec::with_capacity(snapshots.len()),
    };
    for snap in snapshots {
        let mut receivers = Vec::with_capacity(snap.receivers.len());
        for (r, rc) in snap.receivers.iter().enumerate() {
            let file = snapshot_file_name(snap.index, r);
            write_iq(&rc.capture, dir.join(&file))?;
            receivers.push(ManifestReceiver {
                name: rc.name.clone(),
                file,
                position_m: arr(rc.state.position),
                velocity_mps: arr(rc.state.velocity),
            });
        }
        manifest.snapshots.push(ManifestSnapshot {
            index: snap.index,
            epoch_s: snap.epoch_s,
            receivers,
        });
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(manifest)
}

/// Loads the snapshots described by `dir/manifest.json`.
pub fn read_capture_dir(dir: impl AsRef<Path>) -> Result<Vec<Snapshot>> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: CaptureManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{MANIFEST_FILE}: {e}")))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Format(format!("unsupported manifest version {}", manifest.version)));
    }
    manifest
        .snapshots
        .iter()
        .map(|ms| {
            let receivers = ms
                .receivers
                .iter()
                .map(|mr| {
                    let state = EcefStateVector::new(vec3(mr.position_m), vec3(mr.velocity_mps));
                    state.validate()?;
                    Ok(ReceiverCapture {
                        name: mr.name.clone(),
                        state,
                        capture: read_iq(dir.join(&mr.file))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let snap = Snapshot {
                index: ms.index,
                epoch_s: ms.epoch_s,
                receivers,
            };
            snap.validate()?;
            Ok(snap)
        })
        .collect()
}
