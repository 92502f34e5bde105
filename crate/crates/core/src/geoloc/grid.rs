use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::geodesy::CandidateGrid;

/// Nonnegative correlation score per candidate, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub grid: Arc<CandidateGrid>,
    pub values: Vec<f64>,
}

impl CorrelationGrid {
    pub fn new(grid: Arc<CandidateGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("correlation value {v} is not finite and >= 0")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<CandidateGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax()]
    }

    /// Population mean and standard deviation.
    pub fn mean_std(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len().is_multiple_of(2) {
            0.5 * (v[m - 1] + v[m])
        } else {
            v[m]
        }
    }

    /// Divides every value by the grid median (no-op on a zero median).
    pub fn normalize_by_median(&mut self) {
        let m = self.median();
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
    }

    /// Adds another grid over the same lattice into this one.
    pub fn add_assign(&mut self, other: &CorrelationGrid) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && !self.grid.same_lattice(&other.grid) {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

/// Noncoherent accumulation: the elementwise sum of per-snapshot grids.
pub fn accumulate_grids(grids: &[CorrelationGrid]) -> Result<CorrelationGrid> {
    let first = grids
        .first()
        .ok_or_else(|| invalid("no grids to accumulate"))?;
    let mut total = first.clone();
    for g in &grids[1..] {
        total.add_assign(g)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::{build_candidate_grid, GridBounds};
    use proptest::prelude::*;

    fn lattice(half: usize) -> Arc<CandidateGrid> {
        Arc::new(build_candidate_grid(&GridBounds::centered(10.0, 10.0, half, 0.1), 0.1, 0.0).unwrap())
    }

    #[test]
    fn single_grid_is_identity_and_copies_scale() {
        let g = lattice(2);
        let vals: Vec<f64> = (0..g.len()).map(|i| i as f64 * 0.5).collect();
        let cg = CorrelationGrid::new(g.clone(), vals.clone()).unwrap();
        assert_eq!(accumulate_grids(std::slice::from_ref(&cg)).unwrap(), cg);
        let sum = accumulate_grids(&vec![cg.clone(); 4]).unwrap();
        for (s, v) in sum.values.iter().zip(&vals) {
            assert_eq!(*s, 4.0 * v);
        }
    }

    #[test]
    fn mixed_lattices_rejected() {
        let a = CorrelationGrid::zeros(lattice(2));
        let b = CorrelationGrid::zeros(lattice(3));
        assert!(matches!(accumulate_grids(&[a, b]), Err(Error::GridMismatch)));
        // structurally equal lattices behind different Arcs are fine
        let c = CorrelationGrid::zeros(lattice(2));
        let d = CorrelationGrid::zeros(lattice(2));
        assert!(accumulate_grids(&[c, d]).is_ok());
    }

    #[test]
    fn rejects_negative_and_wrong_length() {
        let g = lattice(1);
        assert!(CorrelationGrid::new(g.clone(), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; g.len()];
        v[0] = -1.0;
        assert!(CorrelationGrid::new(g, v).is_err());
    }

    #[test]
    fn median_normalization() {
        let g = lattice(1);
        let mut cg = CorrelationGrid::new(g.clone(), (1..=9).map(f64::from).collect()).unwrap();
        cg.normalize_by_median();
        assert_eq!(cg.values[4], 1.0);
        let mut zero = CorrelationGrid::zeros(g);
        zero.normalize_by_median();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    proptest! {
        #[test]
        fn accumulation_order_independent(
            a in prop::collection::vec(0.0f64..1e6, 9),
            b in prop::collection::vec(0.0f64..1e6, 9),
            c in prop::collection::vec(0.0f64..1e6, 9),
        ) {
            let g = lattice(1);
            let mk = |v: &Vec<f64>| CorrelationGrid::new(g.clone(), v.clone()).unwrap();
            let abc = accumulate_grids(&[mk(&a), mk(&b), mk(&c)]).unwrap();
            let cab = accumulate_grids(&[mk(&c), mk(&a), mk(&b)]).unwrap();
            let nested = accumulate_grids(&[mk(&a), accumulate_grids(&[mk(&b), mk(&c)]).unwrap()]).unwrap();
            for i in 0..9 {
                let r = abc.values[i].max(1e-300);
                prop_assert!((abc.values[i] - cab.values[i]).abs() <= 1e-10 * r);
                prop_assert!((abc.values[i] - nested.values[i]).abs() <= 1e-10 * r);
            }
        }
    }
}
