//! Multiple Loewner chains in the upper half-plane.
//!
//! The forward chain `∂_t g_t(z) = (1/N) Σ_j 2/(g_t(z) − λ_j(t))` is integrated
//! with RK4 on the force grid (forces interpolated linearly). The backward
//! chain driven by `λ_j(T − t)` gives the inverse map `f_T = h_T`, which is
//! what [`trace_extract`] and the hull-level checks use.

mod chain;
mod forces;
mod trace;

pub use chain::{
    backward_evolve, capacity_coefficient, forward_evolve, roundtrip_check, LoewnerConfig,
    MapTrajectory,
};
pub use forces::DrivingForces;
pub use trace::{
    default_trace_offset, sample_indices, trace_extract, HullPolyline, IntersectionWarning, Trace,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoewnerError {
    #[error("point {re}+{im}i is not in the upper half-plane")]
    NotInUpperHalfPlane { re: f64, im: f64 },
    #[error("point swallowed at t = {time}")]
    SwallowedPoint { time: f64 },
    #[error("at least one driving force is required")]
    NoForces,
    #[error("driving force has {found} samples, expected {expected}")]
    ForceLength { expected: usize, found: usize },
    #[error("driving force contains a non-finite value")]
    NonFiniteForce,
    #[error("forces differ in count or grid")]
    IncompatibleForces,
    #[error("time {t} is outside the force grid")]
    HorizonOutOfRange { t: f64 },
    #[error("trace offset must be positive, got {0}")]
    InvalidOffset(f64),
}
