use serde::{Deserialize, Serialize};

use super::PathError;

/// Uniform discretization of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self, PathError> {
        if n_steps == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(PathError::InvalidGrid { horizon, n_steps });
        }
        Ok(Self { horizon, n_steps })
    }

    /// Grid on `[0, horizon]` whose step is the closest achievable to `dt`.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self, PathError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(PathError::InvalidGrid { horizon, n_steps: 0 });
        }
        let n = (horizon / dt).round();
        if !(n >= 1.0) || n > 1e9 {
            return Err(PathError::InvalidGrid { horizon, n_steps: 0 });
        }
        Self::new(horizon, n as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// `t_i`; the last knot is exactly `T`.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Same horizon, `factor` times as many steps.
    pub fn refine(&self, factor: usize) -> Result<Self, PathError> {
        Self::new(self.horizon, self.n_steps * factor)
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self, PathError> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(PathError::InvalidGrid {
                horizon: self.horizon,
                n_steps: self.n_steps,
            });
        }
        Self::new(self.horizon, self.n_steps / factor)
    }

    /// The first `n_steps` steps of this grid, as a grid on `[0, t_n]`.
    pub fn truncate(&self, n_steps: usize) -> Result<Self, PathError> {
        if n_steps > self.n_steps {
            return Err(PathError::InvalidGrid {
                horizon: self.horizon,
                n_steps,
            });
        }
        Self::new(self.time(n_steps), n_steps)
    }

    /// Index of the knot closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = (t / self.dt()).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_steps)
        }
    }

    pub(crate) fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && self.horizon == other.horizon
    }
}
