//! Brownian noise, Bessel gaps and Dyson Brownian motion.
//!
//! Every simulation here is a pure function of its noise. Coupled systems
//! (original and perturbed) are built from the same [`NoisePath`] values, so a
//! zero perturbation reproduces the original bit for bit.

mod bessel;
mod dyson;
mod grid;
mod noise;

pub use bessel::{
    bessel_dimension, bessel_index, bessel_step, bridged_infimum, extend_bessel, long_run_infimum,
    simulate_bessel, simulate_coupled_bessel_dims, simulate_coupled_bessel_starts, BesselPath,
    LongRunInfimum, LongRunSpec,
};
pub use dyson::{
    dyson_pair_from_bessel, from_ascending, implicit_neighbour_step, simulate_dyson,
    simulate_dyson_with_noise, to_ascending, DysonPaths,
};
pub use grid::TimeGrid;
pub use noise::{
    particle_noises, sample_noise, sample_noise_stream, stream_rng, streams, NoisePath,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid time grid: horizon {horizon}, {n_steps} steps")]
    InvalidGrid { horizon: f64, n_steps: usize },
    #[error("state must be positive, got {value}")]
    NonpositiveState { value: f64 },
    #[error("expected kappa <= kappa*, got kappa = {kappa}, kappa* = {kappa_star}")]
    ParamOrder { kappa: f64, kappa_star: f64 },
    #[error("initial positions must be strictly decreasing, got {0:?}")]
    InitOrder(Vec<f64>),
    #[error("particles lost their ordering at t = {time} (step too large?)")]
    OrderingViolation { time: f64 },
    #[error("paths live on different grids")]
    GridMismatch,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{0}")]
    InvalidParameter(String),
}

pub(crate) fn kappa_in_range(kappa: f64) -> Result<(), PathError> {
    if kappa > 0.0 && kappa <= 4.0 {
        Ok(())
    } else {
        Err(PathError::InvalidParameter(format!(
            "kappa must lie in (0,4], got {kappa}"
        )))
    }
}

/// Running infimum of a Bessel path and running supremum of `|W|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunningExtrema {
    pub infimum: Vec<f64>,
    pub sup_abs_noise: Vec<f64>,
}

impl RunningExtrema {
    pub fn new(path: &BesselPath, noise: &NoisePath) -> Self {
        let mut m = f64::INFINITY;
        let infimum = path
            .values()
            .iter()
            .map(|&x| {
                m = m.min(x);
                m
            })
            .collect();
        let mut s = 0.0f64;
        let sup_abs_noise = noise
            .cumulative()
            .into_iter()
            .map(|w| {
                s = s.max(w.abs());
                s
            })
            .collect();
        Self {
            infimum,
            sup_abs_noise,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_extrema_are_monotone() {
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let noise = sample_noise(grid, 11);
        let path = simulate_bessel(&noise, 1.0, 3.0).unwrap();
        let ext = RunningExtrema::new(&path, &noise);
        assert_eq!(ext.infimum[0], 1.0);
        assert!(ext.infimum.windows(2).all(|w| w[1] <= w[0]));
        assert!(ext.sup_abs_noise.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(ext.sup_abs_noise[0], 0.0);
        assert_eq!(ext.infimum.len(), 501);
    }

    #[test]
    fn kappa_range() {
        assert!(kappa_in_range(4.0).is_ok());
        assert!(kappa_in_range(0.0).is_err());
        assert!(kappa_in_range(4.5).is_err());
        assert!(kappa_in_range(f64::NAN).is_err());
    }
}
