//! Execution engines for the candidate-point workload.
//!
//! A backend only ever sees batches: a contiguous range of candidates plus
//! the captures staged once per snapshot. Summation over snapshots and
//! thresholding happen on host-resident grids outside this module.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesy::EcefVector;
use crate::geoloc::correlate::{check_pair, correlate_samples};
use crate::geoloc::geometry::{predict_pair_offsets, PairOffsets};
use crate::scene::EcefStateVector;
use crate::waveform::BasebandCapture;

/// Fastest batch size in the reference GPU measurements; hardware dependent.
pub const DEFAULT_BATCH_SIZE: usize = 8;
pub const DEFAULT_MEMORY_BUDGET_BYTES: u64 = 8 << 30;

const CANDIDATE_BYTES: u64 = std::mem::size_of::<EcefVector>() as u64;
const OFFSET_BYTES: u64 = std::mem::size_of::<PairOffsets>() as u64;
const OUTPUT_BYTES: u64 = std::mem::size_of::<f64>() as u64;
const SAMPLE_BYTES: u64 = std::mem::size_of::<Complex64>() as u64;

/// Partition of `0..n_points` into contiguous batches of `batch_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub n_points: usize,
    pub batch_size: usize,
    pub memory_budget_bytes: u64,
    pub working_set_bytes: u64,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.n_points.div_ceil(self.batch_size)
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn range(&self, batch: usize) -> Range<usize> {
        let start = batch * self.batch_size;
        start..(start + self.batch_size).min(self.n_points)
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.len()).map(|b| self.range(b))
    }
}

/// Working-set estimate: `batch * (candidate + offsets + output) + 2 * capture`.
pub fn working_set_bytes(batch_size: usize, capture_len: usize) -> (u64, u64) {
    let batch = batch_size as u64 * (CANDIDATE_BYTES + OFFSET_BYTES + OUTPUT_BYTES);
    let captures = 2 * capture_len as u64 * SAMPLE_BYTES;
    (batch, captures)
}

pub fn plan_batches(
    n_points: usize,
    batch_size: usize,
    memory_budget_bytes: u64,
    capture_len: usize,
) -> Result<BatchPlan> {
    if n_points == 0 {
        return Err(invalid("batch plan needs at least one point"));
    }
    if batch_size == 0 {
        return Err(invalid("batch size must be >= 1"));
    }
    let effective = batch_size.min(n_points);
    let (batch, captures) = working_set_bytes(effective, capture_len);
    let needed = batch.saturating_add(captures);
    if needed > memory_budget_bytes {
        let term = if captures > memory_budget_bytes || captures >= batch {
            "staged captures (2 x capture bytes)"
        } else {
            "batch buffers (batch_size x per-candidate bytes)"
        };
        return Err(Error::OverBudget {
            needed,
            budget: memory_budget_bytes,
            term,
        });
    }
    Ok(BatchPlan {
        n_points,
        batch_size: effective,
        memory_budget_bytes,
        working_set_bytes: needed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    SerialReference,
    ParallelBatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub kind: BackendKind,
    pub workers: usize,
}

impl fmt::Display for BackendDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:?}, {} workers)", self.name, self.kind, self.workers)
    }
}

/// Pair of captures copied into backend-owned storage once per snapshot.
#[derive(Debug, Clone)]
pub struct StagedPair {
    y1: Arc<[Complex64]>,
    y2: Arc<[Complex64]>,
    sample_rate_hz: f64,
}

impl StagedPair {
    pub fn new(y1: &BasebandCapture, y2: &BasebandCapture) -> Result<Self> {
        check_pair(y1, y2)?;
        Ok(Self {
            y1: Arc::from(y1.samples.as_slice()),
            y2: Arc::from(y2.samples.as_slice()),
            sample_rate_hz: y1.sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn correlate(&self, off: &PairOffsets) -> f64 {
        correlate_samples(
            &self.y1,
            &self.y2,
            off.tdoa_samples,
            off.fdoa_hz,
            self.sample_rate_hz,
        )
    }
}

/// Receiver pair geometry for one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub rx_i: EcefStateVector,
    pub rx_j: EcefStateVector,
    pub wavelength_m: f64,
}

/// Work applied to one batch: batch range and that batch's output slice.
pub type BatchWork<'a> = dyn Fn(Range<usize>, &mut [f64]) -> Result<()> + Sync + 'a;

pub trait ComputeBackend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;

    /// Runs `work` once per batch of `plan`; `out` has one slot per point.
    fn run_batches(&self, plan: &BatchPlan, out: &mut [f64], work: &BatchWork<'_>) -> Result<()>;

    /// Correlation values for one batch of precomputed offsets.
    fn correlate_batch(&self, staged: &StagedPair, batch: &[PairOffsets]) -> Result<Vec<f64>>;
}

fn alloc_output(n: usize, backend: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    out.try_reserve_exact(n).map_err(|e| Error::Backend {
        backend: backend.to_string(),
        message: format!("cannot allocate {n} outputs: {e}"),
    })?;
    out.resize(n, 0.0);
    Ok(out)
}

fn check_plan(plan: &BatchPlan, n: usize) -> Result<()> {
    if plan.n_points != n {
        return Err(invalid(format!(
            "plan covers {} points but {} were supplied",
            plan.n_points, n
        )));
    }
    Ok(())
}

/// Correlates precomputed offsets through `backend` under `plan`.
pub fn correlate_offsets(
    backend: &dyn ComputeBackend,
    staged: &StagedPair,
    offsets: &[PairOffsets],
    plan: &BatchPlan,
) -> Result<Vec<f64>> {
    check_plan(plan, offsets.len())?;
    let mut out = alloc_output(offsets.len(), &backend.descriptor().name)?;
    backend.run_batches(plan, &mut out, &|range, chunk| {
        for (slot, off) in chunk.iter_mut().zip(&offsets[range]) {
            *slot = staged.correlate(off);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Offsets and correlation for every candidate, batch by batch: load the
/// batch's candidates, compute TDOA/FDOA and the correlation, write out.
pub fn evaluate_candidates(
    backend: &dyn ComputeBackend,
    staged: &StagedPair,
    geometry: &PairGeometry,
    points: &[EcefVector],
    plan: &BatchPlan,
) -> Result<Vec<f64>> {
    check_plan(plan, points.len())?;
    let mut out = alloc_output(points.len(), &backend.descriptor().name)?;
    let fs = staged.sample_rate_hz();
    backend.run_batches(plan, &mut out, &|range, chunk| {
        let batch: Vec<EcefVector> = points[range].to_vec();
        let offsets = batch
            .iter()
            .map(|p| predict_pair_offsets(p, &geometry.rx_i, &geometry.rx_j, fs, geometry.wavelength_m))
            .collect::<Result<Vec<_>>>()?;
        for (slot, off) in chunk.iter_mut().zip(&offsets) {
            *slot = staged.correlate(off);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Single-threaded reference backend.
#[derive(Debug, Default, Clone, Copy)]
pub struct SerialBackend;

impl ComputeBackend for SerialBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "serial".into(),
            kind: BackendKind::SerialReference,
            workers: 1,
        }
    }

    fn run_batches(&self, plan: &BatchPlan, out: &mut [f64], work: &BatchWork<'_>) -> Result<()> {
        check_plan(plan, out.len())?;
        for (range, chunk) in plan.ranges().zip(out.chunks_mut(plan.batch_size)) {
            work(range, chunk)?;
        }
        Ok(())
    }

    fn correlate_batch(&self, staged: &StagedPair, batch: &[PairOffsets]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(invalid("empty batch"));
        }
        Ok(batch.iter().map(|o| staged.correlate(o)).collect())
    }
}

/// Batches distributed over a private pool of worker threads. Each
/// candidate is reduced by the same kernel as the serial backend, so
/// results do not depend on the worker count.
pub struct ParallelBackend {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl ParallelBackend {
    /// `workers == 0` selects the available hardware parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("dgeo-worker-{i}"))
            .build()
            .map_err(|e| Error::Backend {
                backend: "parallel".into(),
                message: e.to_string(),
            })?;
        Ok(Self { pool, workers })
    }
}

impl fmt::Debug for ParallelBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParallelBackend")
            .field("workers", &self.workers)
            .finish()
    }
}

impl ComputeBackend for ParallelBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "parallel".into(),
            kind: BackendKind::ParallelBatched,
            workers: self.workers,
        }
    }

    fn run_batches(&self, plan: &BatchPlan, out: &mut [f64], work: &BatchWork<'_>) -> Result<()> {
        check_plan(plan, out.len())?;
        self.pool.install(|| {
            out.par_chunks_mut(plan.batch_size)
                .enumerate()
                .try_for_each(|(b, chunk)| work(plan.range(b), chunk))
        })
    }

    fn correlate_batch(&self, staged: &StagedPair, batch: &[PairOffsets]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(invalid("empty batch"));
        }
        Ok(self
            .pool
            .install(|| batch.par_iter().map(|o| staged.correlate(o)).collect()))
    }
}

pub const BACKEND_NAMES: [&str; 2] = ["serial", "parallel"];

/// Looks a backend up by name.
pub fn backend_by_name(name: &str, workers: usize) -> Result<Box<dyn ComputeBackend>> {
    match name {
        "serial" => Ok(Box::new(SerialBackend)),
        "parallel" => Ok(Box::new(ParallelBackend::new(workers)?)),
        other => Err(invalid(format!(
            "unknown backend '{other}' (expected one of {BACKEND_NAMES:?})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn staged(n: usize, seed: u64) -> StagedPair {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut gen = || -> Vec<Complex64> {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let a = BasebandCapture::new(gen(), 1e6, 0.0, 0.0).unwrap();
        let b = BasebandCapture::new(gen(), 1e6, 0.0, 0.0).unwrap();
        StagedPair::new(&a, &b).unwrap()
    }

    fn offsets(n: usize, seed: u64) -> Vec<PairOffsets> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| PairOffsets {
                tdoa_samples: rng.random_range(-300..300),
                fdoa_hz: rng.random_range(-5e3..5e3),
            })
            .collect()
    }

    #[test]
    fn plan_arithmetic() {
        let p = plan_batches(1_000_000, 8, u64::MAX, 1000).unwrap();
        assert_eq!(p.len(), 125_000);
        let p = plan_batches(10, 64, u64::MAX, 1000).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.range(0), 0..10);
        assert!(plan_batches(0, 8, u64::MAX, 1).is_err());
        assert!(plan_batches(1, 0, u64::MAX, 1).is_err());
    }

    #[test]
    fn over_budget_names_the_term() {
        let err = plan_batches(100, 8, 1000, 1_000_000).unwrap_err();
        match err {
            Error::OverBudget { term, .. } => assert!(term.contains("captures")),
            e => panic!("unexpected {e}"),
        }
        let err = plan_batches(1 << 30, 1 << 28, 1 << 30, 10).unwrap_err();
        match err {
            Error::OverBudget { term, .. } => assert!(term.contains("batch")),
            e => panic!("unexpected {e}"),
        }
    }

    proptest! {
        #[test]
        fn batches_partition_the_points(n in 1usize..5000, bs in 1usize..700) {
            let p = plan_batches(n, bs, u64::MAX, 16).unwrap();
            let mut next = 0;
            for r in p.ranges() {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start && r.end - r.start <= bs);
                next = r.end;
            }
            prop_assert_eq!(next, n);
            prop_assert_eq!(p.len(), n.div_ceil(bs));
        }
    }

    #[test]
    fn serial_batch_of_one_matches_point() {
        let st = staged(512, 1);
        let off = offsets(1, 2);
        let v = SerialBackend.correlate_batch(&st, &off).unwrap();
        assert_eq!(v[0], st.correlate(&off[0]));
        assert!(SerialBackend.correlate_batch(&st, &[]).is_err());
    }

    #[test]
    fn backends_agree_and_repeat() {
        let st = staged(2048, 3);
        let off = offsets(777, 4);
        let par = ParallelBackend::new(3).unwrap();
        let reference: Vec<f64> = off.iter().map(|o| st.correlate(o)).collect();
        for bs in [1, 5, 8, 100, 1000] {
            let plan = plan_batches(off.len(), bs, u64::MAX, st.len()).unwrap();
            let s = correlate_offsets(&SerialBackend, &st, &off, &plan).unwrap();
            let p = correlate_offsets(&par, &st, &off, &plan).unwrap();
            let p2 = correlate_offsets(&par, &st, &off, &plan).unwrap();
            assert_eq!(s, reference);
            assert_eq!(p, reference);
            assert_eq!(p, p2);
        }
        assert_eq!(par.correlate_batch(&st, &off).unwrap(), reference);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let st = staged(1024, 5);
        let off = offsets(300, 6);
        let plan = plan_batches(off.len(), 7, u64::MAX, st.len()).unwrap();
        let one = correlate_offsets(&ParallelBackend::new(1).unwrap(), &st, &off, &plan).unwrap();
        let four = correlate_offsets(&ParallelBackend::new(4).unwrap(), &st, &off, &plan).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn registry() {
        assert_eq!(backend_by_name("serial", 0).unwrap().descriptor().kind, BackendKind::SerialReference);
        assert_eq!(
            backend_by_name("parallel", 2).unwrap().descriptor(),
            BackendDescriptor {
                name: "parallel".into(),
                kind: BackendKind::ParallelBatched,
                workers: 2
            }
        );
        assert!(backend_by_name("gpu", 0).is_err());
    }

    #[test]
    fn plan_length_mismatch_is_an_error() {
        let st = staged(64, 7);
        let off = offsets(10, 8);
        let plan = plan_batches(11, 4, u64::MAX, 64).unwrap();
        assert!(correlate_offsets(&SerialBackend, &st, &off, &plan).is_err());
    }
}
