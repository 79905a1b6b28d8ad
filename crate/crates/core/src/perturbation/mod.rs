//! Coupled original/perturbed systems and the bounds relating them.
//!
//! Both systems of a pair are driven by the same Brownian increments: an
//! initial-value perturbation changes only the starting points, a diffusivity
//! perturbation only the Bessel dimension of the gap.

mod diagnostics;
mod init;
mod kappa;
mod laws;

pub use diagnostics::{
    convergence_sweep, q_diagnostic, QSeries, SweepMode, SweepRow, SweepSetup, SweepTable,
};
pub use init::{
    coupled_init_pair, identity_residual, run_init_perturbation, IdentityReport, InitPair,
    InitPathRecord, InitPerturbConfig, InitPerturbationReport,
};
pub use kappa::{
    coupled_kappa_pair, run_kappa_perturbation, KappaPathRecord, KappaPerturbConfig,
    KappaPerturbationReport, TailReport,
};
pub use laws::{
    event_probability, infimum_law_cdf, normal_cdf, phi, sup_abs_tail_envelope, sup_bm_cdf, zeta,
    zeta_two_term, PhiCoefficients,
};

use thiserror::Error;

use crate::loewner::LoewnerError;
use crate::metrics::MetricsError;
use crate::paths::PathError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("expected kappa < kappa*, got kappa = {kappa}, kappa* = {kappa_star}")]
    ParamOrder { kappa: f64, kappa_star: f64 },
    #[error("Q requires at least 3 particles, got {0}")]
    TooFewParticles(usize),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Loewner(#[from] LoewnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// `∫₀^{t_k} f ds` by the trapezoid rule, for every knot `k`.
pub(crate) fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Standard error of a frequency `p` over `n` samples.
pub fn frequency_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
