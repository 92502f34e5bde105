//! C ABI for the `dgeo` toolkit.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `dgeo_*_new`/`load`/`read` call and released by the matching `_free`.
//! Fallible functions return a [`DgeoStatus`]; on failure the calling
//! thread's last error message describes the cause.
//!
//! Conventions:
//! * Out-pointers are written only on success.
//! * Strings are NUL-terminated UTF-8.
//! * Complex samples are interleaved `(re, im)` doubles.
//! * Handles are not thread-safe; use one handle per thread or lock.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use num_complex::Complex64;

use dgeo::backend::{backend_by_name, ComputeBackend};
use dgeo::geoloc::{correlate_point, detect_emitters, geolocate, CorrelationGrid, EmitterEstimate, PairOffsets};
use dgeo::io::{
    parse_scenario, read_capture_dir, read_grid, read_iq, render_heatmap, write_capture_dir, write_grid, write_iq,
    GridFormat, ScenarioConfig,
};
use dgeo::scene::{simulate_scenario, Scenario, Snapshot};
use dgeo::waveform::BasebandCapture;
use dgeo::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgeoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    GridTooLarge = 4,
    CaptureMismatch = 5,
    BufferTooShort = 6,
    GridMismatch = 7,
    OverBudget = 8,
    Backend = 9,
    Config = 10,
    Format = 11,
    Io = 12,
    InvalidUtf8 = 13,
    OutOfRange = 14,
    Panic = 15,
}

/// Grid file encodings accepted by [`dgeo_grid_write`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgeoGridFormat {
    Csv = 0,
    Binary = 1,
}

/// One detected emitter.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DgeoDetection {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
    pub lat_idx: usize,
    pub lon_idx: usize,
    pub score: f64,
    pub score_zsigma: f64,
}

/// Parsed scenario file.
pub struct DgeoScenario {
    config: ScenarioConfig,
    scenario: Scenario,
}

/// Snapshots: per-receiver captures and states at one epoch each.
pub struct DgeoSnapshots(Vec<Snapshot>);

pub struct DgeoCapture(BasebandCapture);

pub struct DgeoBackend(Box<dyn ComputeBackend>);

pub struct DgeoGrid(CorrelationGrid);

pub struct DgeoDetections(Vec<EmitterEstimate>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DgeoStatus {
    match e {
        Error::InvalidArgument(_) => DgeoStatus::InvalidArgument,
        Error::Degenerate(_) => DgeoStatus::Degenerate,
        Error::GridTooLarge { .. } => DgeoStatus::GridTooLarge,
        Error::CaptureMismatch(_) => DgeoStatus::CaptureMismatch,
        Error::BufferTooShort(_) => DgeoStatus::BufferTooShort,
        Error::GridMismatch => DgeoStatus::GridMismatch,
        Error::OverBudget { .. } => DgeoStatus::OverBudget,
        Error::Backend { .. } => DgeoStatus::Backend,
        Error::Config { .. } => DgeoStatus::Config,
        Error::Format(_) => DgeoStatus::Format,
        Error::Io(_) => DgeoStatus::Io,
    }
}

/// Internal failure carrying a status and message.
struct Fail(DgeoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DgeoStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DgeoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            DgeoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            DgeoStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DgeoStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `dgeo_*` call on the same thread.
#[no_mangle]
pub extern "C" fn dgeo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn dgeo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- scenario ----------------------------------------------------------

/// Parses and validates a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_scenario_load(path: *const c_char, out: *mut *mut DgeoScenario) -> DgeoStatus {
    guard(|| {
        let (config, scenario) = parse_scenario(path_arg(path, "path")?)?;
        put(out, DgeoScenario { config, scenario }, "out")
    })
}

/// Number of receivers, or 0 for NULL.
///
/// # Safety
/// `sc` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dgeo_scenario_receiver_count(sc: *const DgeoScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.scenario.receivers.len())
}

/// Number of snapshots the scenario simulates, or 0 for NULL.
///
/// # Safety
/// `sc` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn dgeo_scenario_snapshot_count(sc: *const DgeoScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.scenario.timing.snapshot_count)
}

/// # Safety
/// `sc` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_scenario_free(sc: *mut DgeoScenario) {
    release(sc)
}

/// Simulates every snapshot of `sc`.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_scenario_simulate(sc: *const DgeoScenario, out: *mut *mut DgeoSnapshots) -> DgeoStatus {
    guard(|| {
        let sc = borrow(sc, "scenario")?;
        put(out, DgeoSnapshots(simulate_scenario(&sc.scenario)?), "out")
    })
}

// ---- snapshots ---------------------------------------------------------

/// Writes a capture directory (DGIQ files plus manifest).
///
/// # Safety
/// `snaps` must be live; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dgeo_snapshots_write_dir(snaps: *const DgeoSnapshots, dir: *const c_char) -> DgeoStatus {
    guard(|| {
        let s = borrow(snaps, "snapshots")?;
        write_capture_dir(path_arg(dir, "dir")?, &s.0)?;
        Ok(())
    })
}

/// Loads a capture directory written by [`dgeo_snapshots_write_dir`] or the CLI.
///
/// # Safety
/// `dir` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_snapshots_read_dir(dir: *const c_char, out: *mut *mut DgeoSnapshots) -> DgeoStatus {
    guard(|| put(out, DgeoSnapshots(read_capture_dir(path_arg(dir, "dir")?)?), "out"))
}

/// # Safety
/// `snaps` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn dgeo_snapshots_count(snaps: *const DgeoSnapshots) -> usize {
    snaps.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the capture of receiver `receiver` in snapshot `snapshot`.
///
/// # Safety
/// `snaps` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_snapshots_capture(
    snaps: *const DgeoSnapshots,
    snapshot: usize,
    receiver: usize,
    out: *mut *mut DgeoCapture,
) -> DgeoStatus {
    guard(|| {
        let s = borrow(snaps, "snapshots")?;
        let rc = s
            .0
            .get(snapshot)
            .and_then(|sn| sn.receivers.get(receiver))
            .ok_or_else(|| Fail(DgeoStatus::OutOfRange, format!("no receiver {receiver} in snapshot {snapshot}")))?;
        put(out, DgeoCapture(rc.capture.clone()), "out")
    })
}

/// # Safety
/// `snaps` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_snapshots_free(snaps: *mut DgeoSnapshots) {
    release(snaps)
}

// ---- captures ----------------------------------------------------------

/// Builds a capture from `len` interleaved `(re, im)` pairs.
///
/// # Safety
/// `iq` must point at `2 * len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_new(
    iq: *const f64,
    len: usize,
    sample_rate_hz: f64,
    start_time_s: f64,
    center_freq_hz: f64,
    out: *mut *mut DgeoCapture,
) -> DgeoStatus {
    guard(|| {
        if iq.is_null() && len > 0 {
            return Err(null("iq"));
        }
        let raw = if len == 0 { &[][..] } else { std::slice::from_raw_parts(iq, 2 * len) };
        let samples = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let cap = BasebandCapture::new(samples, sample_rate_hz, start_time_s, center_freq_hz)?;
        put(out, DgeoCapture(cap), "out")
    })
}

/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_read(path: *const c_char, out: *mut *mut DgeoCapture) -> DgeoStatus {
    guard(|| put(out, DgeoCapture(read_iq(path_arg(path, "path")?)?), "out"))
}

/// Writes a DGIQ file (samples stored as 32-bit floats).
///
/// # Safety
/// `cap` live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_write(cap: *const DgeoCapture, path: *const c_char) -> DgeoStatus {
    guard(|| {
        write_iq(&borrow(cap, "capture")?.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Sample count, or 0 for NULL.
///
/// # Safety
/// `cap` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_len(cap: *const DgeoCapture) -> usize {
    cap.as_ref().map_or(0, |c| c.0.len())
}

/// Sample rate in Hz, or 0 for NULL.
///
/// # Safety
/// `cap` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_sample_rate_hz(cap: *const DgeoCapture) -> f64 {
    cap.as_ref().map_or(0.0, |c| c.0.sample_rate_hz)
}

/// Copies the samples into `iq` as `2 * len` interleaved doubles.
///
/// # Safety
/// `iq` must have room for `2 * capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_samples(cap: *const DgeoCapture, iq: *mut f64, capacity: usize) -> DgeoStatus {
    guard(|| {
        let c = &borrow(cap, "capture")?.0;
        if iq.is_null() {
            return Err(null("iq"));
        }
        if capacity < c.len() {
            return Err(Fail(
                DgeoStatus::BufferTooShort,
                format!("buffer holds {capacity} samples, capture has {}", c.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(iq, 2 * c.len());
        for (d, s) in dst.chunks_exact_mut(2).zip(&c.samples) {
            d[0] = s.re;
            d[1] = s.im;
        }
        Ok(())
    })
}

/// # Safety
/// `cap` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_capture_free(cap: *mut DgeoCapture) {
    release(cap)
}

/// Correlation magnitude of two equal-length captures at one
/// (TDOA in samples, FDOA in Hz) offset.
///
/// # Safety
/// Captures live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_correlate_point(
    y1: *const DgeoCapture,
    y2: *const DgeoCapture,
    tdoa_samples: i64,
    fdoa_hz: f64,
    out: *mut f64,
) -> DgeoStatus {
    guard(|| {
        let (a, b) = (borrow(y1, "y1")?, borrow(y2, "y2")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = correlate_point(&a.0, &b.0, &PairOffsets { tdoa_samples, fdoa_hz })?;
        Ok(())
    })
}

// ---- backends ----------------------------------------------------------

/// Creates a backend by name (`"serial"` or `"parallel"`); `workers == 0`
/// uses every core.
///
/// # Safety
/// `name` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_backend_new(name: *const c_char, workers: usize, out: *mut *mut DgeoBackend) -> DgeoStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let n = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Fail(DgeoStatus::InvalidUtf8, "name is not valid UTF-8".into()))?;
        put(out, DgeoBackend(backend_by_name(n, workers)?), "out")
    })
}

/// # Safety
/// `b` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_backend_free(b: *mut DgeoBackend) {
    release(b)
}

// ---- geolocation -------------------------------------------------------

/// Correlates every snapshot over the scenario grid and returns the
/// accumulated grid. `batch_size == 0` keeps the scenario's setting.
///
/// # Safety
/// Handles live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_geolocate(
    sc: *const DgeoScenario,
    snaps: *const DgeoSnapshots,
    backend: *const DgeoBackend,
    batch_size: usize,
    out: *mut *mut DgeoGrid,
) -> DgeoStatus {
    guard(|| {
        let sc = borrow(sc, "scenario")?;
        let snaps = borrow(snaps, "snapshots")?;
        let backend = borrow(backend, "backend")?;
        let mut opts = sc.config.geolocation_options();
        if batch_size > 0 {
            opts.batch_size = batch_size;
        }
        let grid = Arc::new(sc.scenario.grid.build()?);
        let r = geolocate(&grid, &snaps.0, backend.0.as_ref(), &opts)?;
        put(out, DgeoGrid(r.accumulated), "out")
    })
}

// ---- grids -------------------------------------------------------------

/// Writes the grid's (latitude, longitude) shape; zeros for NULL.
///
/// # Safety
/// `rows` and `cols` must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_shape(g: *const DgeoGrid, rows: *mut usize, cols: *mut usize) {
    let (r, c) = g.as_ref().map_or((0, 0), |g| g.0.grid.shape());
    if let Some(p) = rows.as_mut() {
        *p = r;
    }
    if let Some(p) = cols.as_mut() {
        *p = c;
    }
}

/// Copies the lat-major values into `values`.
///
/// # Safety
/// `values` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_values(g: *const DgeoGrid, values: *mut f64, capacity: usize) -> DgeoStatus {
    guard(|| {
        let g = &borrow(g, "grid")?.0;
        if values.is_null() {
            return Err(null("values"));
        }
        if capacity < g.len() {
            return Err(Fail(
                DgeoStatus::BufferTooShort,
                format!("buffer holds {capacity} values, grid has {}", g.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.values.as_ptr(), values, g.len());
        Ok(())
    })
}

/// # Safety
/// `g` live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_write(g: *const DgeoGrid, path: *const c_char, format: DgeoGridFormat) -> DgeoStatus {
    guard(|| {
        let f = match format {
            DgeoGridFormat::Csv => GridFormat::Csv,
            DgeoGridFormat::Binary => GridFormat::Binary,
        };
        write_grid(&borrow(g, "grid")?.0, path_arg(path, "path")?, f)?;
        Ok(())
    })
}

/// Reads a DGGR binary grid.
///
/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_read(path: *const c_char, out: *mut *mut DgeoGrid) -> DgeoStatus {
    guard(|| put(out, DgeoGrid(read_grid(path_arg(path, "path")?)?), "out"))
}

/// Writes a 16-bit P5 graymap heatmap, north up.
///
/// # Safety
/// `g` live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_write_heatmap(g: *const DgeoGrid, path: *const c_char) -> DgeoStatus {
    guard(|| {
        render_heatmap(&borrow(g, "grid")?.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_grid_free(g: *mut DgeoGrid) {
    release(g)
}

// ---- detection ---------------------------------------------------------

/// Threshold detection on a grid.
///
/// # Safety
/// `g` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_detect(
    g: *const DgeoGrid,
    k_sigma: f64,
    exclusion_radius_cells: usize,
    out: *mut *mut DgeoDetections,
) -> DgeoStatus {
    guard(|| {
        let d = detect_emitters(&borrow(g, "grid")?.0, k_sigma, exclusion_radius_cells)?;
        put(out, DgeoDetections(d), "out")
    })
}

/// # Safety
/// `d` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn dgeo_detections_count(d: *const DgeoDetections) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// Copies detection `index` (0 = strongest) into `out`.
///
/// # Safety
/// `d` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dgeo_detections_get(d: *const DgeoDetections, index: usize, out: *mut DgeoDetection) -> DgeoStatus {
    guard(|| {
        let e = borrow(d, "detections")?
            .0
            .get(index)
            .ok_or_else(|| Fail(DgeoStatus::OutOfRange, format!("no detection {index}")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = DgeoDetection {
            lat_deg: e.location.lat_deg,
            lon_deg: e.location.lon_deg,
            alt_m: e.location.alt_m,
            lat_idx: e.lat_idx,
            lon_idx: e.lon_idx,
            score: e.score,
            score_zsigma: e.score_zsigma,
        };
        Ok(())
    })
}

/// # Safety
/// `d` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dgeo_detections_free(d: *mut DgeoDetections) {
    release(d)
}
