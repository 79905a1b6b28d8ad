use num_complex::Complex64;
use serde::Serialize;

use super::MetricsError;
use crate::loewner::{backward_evolve, DrivingForces, LoewnerConfig};
use crate::report::{params, BoundReport};

/// `C(δ, T) = √(1 + 4T/δ²)`.
pub fn flow_sensitivity_constant(delta: f64, horizon: f64) -> f64 {
    (1.0 + 4.0 * horizon / (delta * delta)).sqrt()
}

/// Margins `C(δ,T)·Σ_j sup|λ¹_j − λ²_j| − |h¹_T(z) − h²_T(z)|`, one per point.
pub fn flow_sensitivity_margins(
    forces1: &DrivingForces,
    forces2: &DrivingForces,
    points: &[Complex64],
    delta: f64,
    cfg: &LoewnerConfig,
) -> Result<Vec<f64>, MetricsError> {
    if !(delta > 0.0) {
        return Err(MetricsError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if let Some(z) = points.iter().find(|z| z.im < delta) {
        return Err(MetricsError::InvalidParameter(format!("point {z} lies below Im z = {delta}")));
    }
    let horizon = forces1.grid().horizon();
    let bound = flow_sensitivity_constant(delta, horizon) * forces1.total_sup_difference(forces2)?;
    points
        .iter()
        .map(|&z| {
            let h1 = backward_evolve(z, forces1, horizon, cfg)?;
            let h2 = backward_evolve(z, forces2, horizon, cfg)?;
            Ok(bound - (h1 - h2).norm())
        })
        .collect()
}

pub fn check_flow_sensitivity(
    forces1: &DrivingForces,
    forces2: &DrivingForces,
    points: &[Complex64],
    delta: f64,
    cfg: &LoewnerConfig,
) -> Result<BoundReport, MetricsError> {
    let margins = flow_sensitivity_margins(forces1, forces2, points, delta, cfg)?;
    let grid = forces1.grid();
    Ok(BoundReport::from_margins(
        "backward-map stability",
        params([("delta", delta), ("T", grid.horizon())]),
        1,
        &margins,
        1e-12,
    ))
}

/// `f′(z)` by a central difference with step `h`.
pub fn finite_difference_derivative<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64, MetricsError>
where
    F: Fn(Complex64) -> Result<Complex64, MetricsError>,
{
    let step = Complex64::new(h, 0.0);
    Ok((f(z + step)? - f(z - step)?) / (2.0 * h))
}

/// Both sides of the distortion bracket at one `(z, w, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KoebeOutcome {
    pub lower: f64,
    pub observed: f64,
    pub upper: f64,
    pub derivative: f64,
    pub holds: bool,
}

/// Checks `|f′(z)||z−w|/(1+r)² ≤ |f(z)−f(w)| ≤ |f′(z)||z−w|/(1−r)²` for `f`
/// conformal on `ℍ`, where `dist(z, ∂ℍ) = Im z`.
///
/// `f′` uses a central difference with step `10⁻⁶·Im z`; the bracket is
/// widened by the relative tolerance `10⁻⁴`.
pub fn koebe_check<F>(f: &F, z: Complex64, w: Complex64, r: f64) -> Result<KoebeOutcome, MetricsError>
where
    F: Fn(Complex64) -> Result<Complex64, MetricsError>,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(MetricsError::InvalidParameter(format!("r must lie in (0,1), got {r}")));
    }
    let d = z.im;
    let distance = (z - w).norm();
    if !(d > 0.0) || distance > r * d {
        return Err(MetricsError::DomainViolation {
            distance,
            limit: r * d,
        });
    }
    let derivative = finite_difference_derivative(f, z, 1e-6 * d)?.norm();
    let observed = (f(z)? - f(w)?).norm();
    let lower = derivative * distance / ((1.0 + r) * (1.0 + r));
    let upper = derivative * distance / ((1.0 - r) * (1.0 - r));
    let tol = 1e-4;
    let holds = observed >= lower * (1.0 - tol) && observed <= upper * (1.0 + tol);
    Ok(KoebeOutcome {
        lower,
        observed,
        upper,
        derivative,
        holds,
    })
}

/// `|f′(ζ + iδ)|` for the backward map `f = h_T` over a set of probes, and
/// `θ̂ = max log|f′| / log(1/δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeProbe {
    pub probes: Vec<(f64, f64)>,
    pub derivatives: Vec<f64>,
    pub theta_hat: f64,
}

impl DerivativeProbe {
    /// `θ = max(θ̂, 0)`.
    pub fn theta(&self) -> f64 {
        self.theta_hat.max(0.0)
    }

    /// The growth hypothesis `|f′(ζ + iδ)| ≤ δ^{−θ}` with some `θ < 1` at
    /// the probes.
    pub fn hypothesis_holds(&self) -> bool {
        self.theta_hat < 1.0
    }
}

/// Probe offsets `δ_max·q^k`, `k = 0..count`.
pub fn probe_deltas(delta_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| delta_max * ratio.powi(k as i32)).collect()
}

/// Probes with `δ ≥ 1` carry no information on the exponent and are skipped.
pub fn derivative_probe(
    forces: &DrivingForces,
    zetas: &[f64],
    deltas: &[f64],
    cfg: &LoewnerConfig,
) -> Result<DerivativeProbe, MetricsError> {
    let horizon = forces.grid().horizon();
    let f = |z: Complex64| -> Result<Complex64, MetricsError> {
        Ok(backward_evolve(z, forces, horizon, cfg)?)
    };
    let mut probes = Vec::new();
    let mut derivatives = Vec::new();
    let mut theta_hat = f64::NEG_INFINITY;
    for &zeta in zetas {
        for &delta in deltas {
            if !(delta > 0.0 && delta < 1.0) {
                continue;
            }
            let z = Complex64::new(zeta, delta);
            let d = finite_difference_derivative(&f, z, 1e-6 * delta)?.norm();
            theta_hat = theta_hat.max(d.ln() / (1.0 / delta).ln());
            probes.push((zeta, delta));
            derivatives.push(d);
        }
    }
    if probes.is_empty() {
        theta_hat = 0.0;
    }
    Ok(DerivativeProbe {
        probes,
        derivatives,
        theta_hat,
    })
}

/// `8(Tε)^{(1−θ)/2} + 3√(ε(1+ε))`.
pub fn hull_distance_bound(horizon: f64, eps: f64, theta: f64) -> f64 {
    8.0 * (horizon * eps).powf((1.0 - theta) / 2.0) + 3.0 * (eps * (1.0 + eps)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HausdorffReport {
    pub d_h: f64,
    pub rhs: f64,
    pub theta_hat: f64,
    /// Holds only at the probes actually evaluated.
    pub hypothesis_verified: bool,
    pub pass: bool,
}

pub fn check_hull_distance(d_h: f64, eps: f64, theta_hat: f64, horizon: f64) -> HausdorffReport {
    let hypothesis_verified = theta_hat < 1.0;
    let rhs = hull_distance_bound(horizon, eps, theta_hat.max(0.0));
    HausdorffReport {
        d_h,
        rhs,
        theta_hat,
        hypothesis_verified,
        pass: d_h <= rhs,
    }
}
