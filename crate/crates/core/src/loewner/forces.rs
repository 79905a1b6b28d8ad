use serde::Serialize;

use super::LoewnerError;
use crate::paths::{DysonPaths, TimeGrid};

/// `N` driving functions on a common grid, linearly interpolated in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivingForces {
    grid: TimeGrid,
    paths: Vec<Vec<f64>>,
}

impl DrivingForces {
    pub fn new(grid: TimeGrid, paths: Vec<Vec<f64>>) -> Result<Self, LoewnerError> {
        if paths.is_empty() {
            return Err(LoewnerError::NoForces);
        }
        for p in &paths {
            if p.len() != grid.n_steps() + 1 {
                return Err(LoewnerError::ForceLength {
                    expected: grid.n_steps() + 1,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(LoewnerError::NonFiniteForce);
            }
        }
        Ok(Self { grid, paths })
    }

    pub fn from_dyson(paths: &DysonPaths) -> Self {
        Self {
            grid: paths.grid(),
            paths: paths.positions().to_vec(),
        }
    }

    /// Forces that stay at `values[j]` for all time.
    pub fn constant(grid: TimeGrid, values: &[f64]) -> Result<Self, LoewnerError> {
        Self::new(
            grid,
            values.iter().map(|&v| vec![v; grid.n_steps() + 1]).collect(),
        )
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n_forces(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, j: usize) -> &[f64] {
        &self.paths[j]
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// `λ_j(t)` by linear interpolation between knots.
    pub fn value(&self, j: usize, t: f64) -> f64 {
        let n = self.grid.n_steps();
        let dt = self.grid.dt();
        let pos = (t / dt).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        let p = &self.paths[j];
        p[i] + frac * (p[i + 1] - p[i])
    }

    /// Every force shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            grid: self.grid,
            paths: self
                .paths
                .iter()
                .map(|p| p.iter().map(|x| x + offset).collect())
                .collect(),
        }
    }

    /// The forces restricted to the first `n_steps` steps.
    pub fn truncate(&self, n_steps: usize) -> Result<Self, LoewnerError> {
        let grid = self
            .grid
            .truncate(n_steps)
            .map_err(|_| LoewnerError::HorizonOutOfRange { t: n_steps as f64 })?;
        Ok(Self {
            grid,
            paths: self.paths.iter().map(|p| p[..=n_steps].to_vec()).collect(),
        })
    }

    /// `sup_t |λ_j(t) − μ_j(t)|` for each `j`.
    pub fn sup_differences(&self, other: &DrivingForces) -> Result<Vec<f64>, LoewnerError> {
        if self.n_forces() != other.n_forces() || self.grid != other.grid {
            return Err(LoewnerError::IncompatibleForces);
        }
        Ok(self
            .paths
            .iter()
            .zip(&other.paths)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            .collect())
    }

    /// `Σ_j sup_t |λ_j − μ_j|`.
    pub fn total_sup_difference(&self, other: &DrivingForces) -> Result<f64, LoewnerError> {
        Ok(self.sup_differences(other)?.iter().sum())
    }

    /// `max_j sup_t |λ_j(t)|`.
    pub fn max_abs(&self) -> f64 {
        self.paths
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let f = DrivingForces::new(grid, vec![vec![0.0, 1.0, 3.0]]).unwrap();
        assert_eq!(f.value(0, 0.0), 0.0);
        assert!((f.value(0, 0.25) - 0.5).abs() < 1e-15);
        assert!((f.value(0, 0.75) - 2.0).abs() < 1e-15);
        assert_eq!(f.value(0, 1.0), 3.0);
        assert_eq!(f.value(0, 2.0), 3.0);
    }

    #[test]
    fn rejects_bad_lengths() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        assert!(DrivingForces::new(grid, vec![vec![0.0, 1.0]]).is_err());
        assert!(DrivingForces::new(grid, vec![]).is_err());
    }

    #[test]
    fn sup_difference_of_shift() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let f = DrivingForces::constant(grid, &[1.0, -1.0]).unwrap();
        let g = f.shifted(0.25);
        assert_eq!(f.sup_differences(&g).unwrap(), vec![0.25, 0.25]);
        assert_eq!(f.total_sup_difference(&g).unwrap(), 0.5);
        assert_eq!(f.max_abs(), 1.0);
    }
}
