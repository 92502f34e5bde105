//! Direct geolocation of GNSS interference.
//!
//! The crate synthesizes multi-receiver baseband captures of interference
//! emitters and locates the emitters by evaluating the position-domain
//! correlation over a geodetic candidate grid, accumulating the per-snapshot
//! grids and thresholding the result. Candidate evaluation runs through a
//! pluggable [`backend::ComputeBackend`].

pub mod constants;
pub mod error;
pub mod geodesy;
pub mod seed;
pub mod waveform;
pub mod backend;
pub mod bench;
pub mod geoloc;
pub mod io;
pub mod scene;

pub use error::{Error, Result};
