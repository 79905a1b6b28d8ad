//! Distances between Loewner chains and between hulls.

mod caratheodory;
mod conformal;
mod hausdorff;

pub use caratheodory::{
    caratheodory_distance, caratheodory_restricted, constant_ctg, delta1_estimate,
    refinement_check, CaratheodoryConstant, GridFlow, RefinementCheck, RestrictedDistance,
};
pub use conformal::{
    check_flow_sensitivity, check_hull_distance, derivative_probe, finite_difference_derivative, koebe_check,
    flow_sensitivity_constant, flow_sensitivity_margins, probe_deltas, hull_distance_bound, DerivativeProbe, HausdorffReport,
    KoebeOutcome,
};
pub use hausdorff::{hausdorff_distance, hausdorff_polylines, hausdorff_sets};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::loewner::LoewnerError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid compact grid: {0}")]
    InvalidGrid(String),
    #[error("grid point {re}+{im}i is swallowed at t = {time}")]
    GridIntersectsHull { re: f64, im: f64, time: f64 },
    #[error("Hausdorff distance of an empty set")]
    EmptySet,
    #[error("|z - w| = {distance} exceeds r·dist(z, ∂D) = {limit}")]
    DomainViolation { distance: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Loewner(#[from] LoewnerError),
}

/// Rectangle `[x_min, x_max] × [y_min, y_max] ⊂ ℍ` sampled on an `nx × ny` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CompactGridSpec {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, MetricsError> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(MetricsError::InvalidGrid("bounds must be finite".into()));
        }
        if !(y_min > 0.0) {
            return Err(MetricsError::InvalidGrid(format!(
                "y_min must be positive, got {y_min}"
            )));
        }
        if x_max < x_min || y_max < y_min {
            return Err(MetricsError::InvalidGrid("empty rectangle".into()));
        }
        if nx == 0 || ny == 0 {
            return Err(MetricsError::InvalidGrid("nx and ny must be positive".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// `δ₂ = dist(G, ℝ) = y_min`.
    pub fn delta2(&self) -> f64 {
        self.y_min
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Grid points, row by row from the bottom.
    pub fn points(&self) -> Vec<Complex64> {
        let xs = Self::axis(self.x_min, self.x_max, self.nx);
        let ys = Self::axis(self.y_min, self.y_max, self.ny);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }

    /// Halve the spacing; every old point stays a grid point.
    pub fn refined(&self) -> Self {
        let up = |n: usize| if n == 1 { 3 } else { 2 * n - 1 };
        Self {
            nx: up(self.nx),
            ny: up(self.ny),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(CompactGridSpec::new(-1.0, 1.0, 0.0, 1.0, 3, 3).is_err());
        assert!(CompactGridSpec::new(1.0, -1.0, 1.0, 2.0, 3, 3).is_err());
        assert!(CompactGridSpec::new(-1.0, 1.0, 1.0, 2.0, 0, 3).is_err());
        let g = CompactGridSpec::new(-1.0, 1.0, 1.0, 2.0, 3, 2).unwrap();
        assert_eq!(g.delta2(), 1.0);
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Complex64::new(-1.0, 1.0));
        assert_eq!(pts[5], Complex64::new(1.0, 2.0));
        let r = g.refined();
        assert_eq!((r.nx, r.ny), (5, 3));
        let fine = r.points();
        assert!(pts.iter().all(|p| fine.contains(p)));
    }
}
