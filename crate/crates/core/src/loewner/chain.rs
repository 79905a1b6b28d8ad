use num_complex::Complex64;
use serde::Serialize;

use super::{DrivingForces, LoewnerError};

/// Integrator settings shared by the forward and backward chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoewnerConfig {
    /// RK4 steps per force-grid step.
    pub substeps: usize,
    /// A forward trajectory is swallowed once `min_j |g − λ_j| < swallow_factor·dt`.
    pub swallow_factor: f64,
    /// Step cap `step_safety·min_j |z − λ_j|²` near a driving point, where the
    /// vector field has time scale `~|z − λ|²`.
    pub step_safety: f64,
}

impl Default for LoewnerConfig {
    fn default() -> Self {
        Self {
            substeps: 4,
            swallow_factor: 10.0,
            step_safety: 0.05,
        }
    }
}

impl LoewnerConfig {
    pub fn swallow_tol(&self, dt: f64) -> f64 {
        self.swallow_factor * dt
    }
}

/// Samples of `t ↦ g_t(z)` on the force grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapTrajectory {
    pub start: Complex64,
    pub times: Vec<f64>,
    pub samples: Vec<Complex64>,
    pub swallowed_at: Option<f64>,
}

impl MapTrajectory {
    pub fn is_alive(&self) -> bool {
        self.swallowed_at.is_none()
    }

    /// `g_T(z)`, or the swallowing time.
    pub fn terminal(&self) -> Result<Complex64, LoewnerError> {
        match self.swallowed_at {
            Some(time) => Err(LoewnerError::SwallowedPoint { time }),
            None => Ok(*self.samples.last().expect("trajectory has its start sample")),
        }
    }
}

/// Forces on one knot interval: `λ_j(τ) = base_j + slope_j (τ − t_i)`.
struct Segment {
    t0: f64,
    base: Vec<f64>,
    slope: Vec<f64>,
    inv_n: f64,
}

impl Segment {
    fn new(forces: &DrivingForces, i: usize) -> Self {
        let grid = forces.grid();
        let dt = grid.dt();
        let (base, slope) = forces
            .paths()
            .iter()
            .map(|p| (p[i], (p[i + 1] - p[i]) / dt))
            .unzip();
        Self {
            t0: grid.time(i),
            base,
            slope,
            inv_n: 1.0 / forces.n_forces() as f64,
        }
    }

    /// `(1/N) Σ_j 2/(z − λ_j(τ))`.
    #[inline]
    fn field(&self, z: Complex64, tau: f64) -> Complex64 {
        let s = tau - self.t0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, m) in self.base.iter().zip(&self.slope) {
            acc += (z - (b + m * s)).inv();
        }
        acc * (2.0 * self.inv_n)
    }

    #[inline]
    fn min_distance(&self, z: Complex64, tau: f64) -> f64 {
        let s = tau - self.t0;
        self.base
            .iter()
            .zip(&self.slope)
            .map(|(b, m)| (z - (b + m * s)).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integrate `dz/dτ = (1/N) Σ 2/(z − λ_j(τ))` from `tau_a` to `tau_b`, both
/// inside knot interval `i`. Either direction is allowed. With
/// `swallow_tol = Some(tol)` the integration stops (returning `Err(τ)`) once
/// `z` comes within `tol` of a driving point.
fn integrate_segment(
    seg: &Segment,
    mut z: Complex64,
    tau_a: f64,
    tau_b: f64,
    nominal: f64,
    cfg: &LoewnerConfig,
    swallow_tol: Option<f64>,
) -> Result<Complex64, f64> {
    let dir = if tau_b >= tau_a { 1.0 } else { -1.0 };
    let total = (tau_b - tau_a).abs();
    let mut done = 0.0;
    while done < total {
        let tau = tau_a + dir * done;
        let dmin = seg.min_distance(z, tau);
        if let Some(tol) = swallow_tol {
            if dmin < tol {
                return Err(tau);
            }
        }
        let remaining = total - done;
        let mut h = nominal.min(cfg.step_safety * dmin * dmin);
        if remaining - h <= 1e-9 * nominal {
            h = remaining;
        }
        let hs = dir * h;
        let k1 = seg.field(z, tau);
        let k2 = seg.field(z + k1 * (0.5 * hs), tau + 0.5 * hs);
        let k3 = seg.field(z + k2 * (0.5 * hs), tau + 0.5 * hs);
        let k4 = seg.field(z + k3 * hs, tau + hs);
        z += (k1 + (k2 + k3) * 2.0 + k4) * (hs / 6.0);
        done = if h == remaining { total } else { done + h };
    }
    Ok(z)
}

fn check_point(z: Complex64) -> Result<(), LoewnerError> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(LoewnerError::NotInUpperHalfPlane { re: z.re, im: z.im })
    }
}

/// Forward chain `∂_t g = (1/N) Σ_j 2/(g − λ_j(t))`, `g_0(z) = z`, sampled at
/// every knot. Stops early if the point is swallowed.
pub fn forward_evolve(
    z: Complex64,
    forces: &DrivingForces,
    cfg: &LoewnerConfig,
) -> Result<MapTrajectory, LoewnerError> {
    check_point(z)?;
    let grid = forces.grid();
    let dt = grid.dt();
    let nominal = dt / cfg.substeps.max(1) as f64;
    let tol = cfg.swallow_tol(dt);
    let n = grid.n_steps();
    let mut times = Vec::with_capacity(n + 1);
    let mut samples = Vec::with_capacity(n + 1);
    times.push(0.0);
    samples.push(z);
    let mut g = z;
    for i in 0..n {
        let seg = Segment::new(forces, i);
        match integrate_segment(&seg, g, grid.time(i), grid.time(i + 1), nominal, cfg, Some(tol)) {
            Ok(next) => {
                g = next;
                times.push(grid.time(i + 1));
                samples.push(g);
            }
            Err(tau) => {
                return Ok(MapTrajectory {
                    start: z,
                    times,
                    samples,
                    swallowed_at: Some(tau),
                })
            }
        }
    }
    Ok(MapTrajectory {
        start: z,
        times,
        samples,
        swallowed_at: None,
    })
}

/// `h_t(z)` for the chain driven by the time-reversed forces `λ_j(t − s)`:
/// `∂_s h = (1/N) Σ_j (−2)/(h − λ_j(t − s))`, `h_0(z) = z`.
///
/// This is the forward vector field integrated from `τ = t` down to `τ = 0`.
pub fn backward_evolve(
    z: Complex64,
    forces: &DrivingForces,
    horizon: f64,
    cfg: &LoewnerConfig,
) -> Result<Complex64, LoewnerError> {
    check_point(z)?;
    let grid = forces.grid();
    let t_max = grid.horizon();
    if !(horizon >= 0.0) || horizon > t_max * (1.0 + 1e-12) {
        return Err(LoewnerError::HorizonOutOfRange { t: horizon });
    }
    let dt = grid.dt();
    let nominal = dt / cfg.substeps.max(1) as f64;
    // Snap to a knot when `horizon` is one up to rounding.
    let k = grid.nearest_index(horizon);
    let (top_index, mut tau) = if (grid.time(k) - horizon).abs() <= 1e-12 * t_max.max(1.0) {
        (k, grid.time(k))
    } else {
        let above = ((horizon / dt).floor() as usize + 1).min(grid.n_steps());
        (above, horizon)
    };
    let mut h = z;
    for i in (0..top_index).rev() {
        let seg = Segment::new(forces, i);
        let lower = grid.time(i);
        h = integrate_segment(&seg, h, tau, lower, nominal, cfg, None)
            .expect("backward integration never stops early");
        tau = lower;
    }
    Ok(h)
}

/// `|h_T(g_T(z)) − z|`, the defect of the backward chain as inverse of the
/// forward one.
pub fn roundtrip_check(
    z: Complex64,
    forces: &DrivingForces,
    cfg: &LoewnerConfig,
) -> Result<f64, LoewnerError> {
    let g = forward_evolve(z, forces, cfg)?.terminal()?;
    let back = backward_evolve(g, forces, forces.grid().horizon(), cfg)?;
    Ok((back - z).norm())
}

/// `(g_T(z) − z)·z`, which tends to the half-plane capacity `2T` as `|z| → ∞`.
pub fn capacity_coefficient(
    z: Complex64,
    forces: &DrivingForces,
    cfg: &LoewnerConfig,
) -> Result<Complex64, LoewnerError> {
    let g = forward_evolve(z, forces, cfg)?.terminal()?;
    Ok((g - z) * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_dyson, TimeGrid};

    fn zero_forces(t: f64, n: usize) -> DrivingForces {
        DrivingForces::constant(TimeGrid::new(t, n).unwrap(), &[0.0, 0.0]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn forward_matches_slit_map() {
        // Both forces at 0: g_t(z) = sqrt(z^2 + 4t). z = 3i is above the slit tip 2i.
        let forces = zero_forces(1.0, 1000);
        let z = c(0.0, 3.0);
        let traj = forward_evolve(z, &forces, &LoewnerConfig::default()).unwrap();
        let g = traj.terminal().unwrap();
        assert!((g - c(0.0, 5f64.sqrt())).norm() < 1e-6, "{g}");
        let z = c(0.7, 0.4);
        let g = forward_evolve(z, &forces, &LoewnerConfig::default())
            .unwrap()
            .terminal()
            .unwrap();
        let exact = (z * z + 4.0).sqrt();
        assert!((g - exact).norm() < 1e-6, "{g} vs {exact}");
    }

    #[test]
    fn point_on_the_slit_is_swallowed() {
        // i lies on the slit [0, 2i]; it is reached at t = 1/4.
        let forces = zero_forces(1.0, 1000);
        let traj = forward_evolve(c(0.0, 1.0), &forces, &LoewnerConfig::default()).unwrap();
        let t = traj.swallowed_at.unwrap();
        assert!((t - 0.25).abs() < 0.01, "{t}");
        assert!(matches!(traj.terminal(), Err(LoewnerError::SwallowedPoint { .. })));
    }

    #[test]
    fn zero_horizon_is_identity() {
        let forces = zero_forces(1.0, 100);
        let z = c(0.3, 0.2);
        assert_eq!(backward_evolve(z, &forces, 0.0, &LoewnerConfig::default()).unwrap(), z);
        let traj = forward_evolve(z, &forces, &LoewnerConfig::default()).unwrap();
        assert_eq!(traj.samples[0], z);
        assert_eq!(traj.times[0], 0.0);
    }

    #[test]
    fn backward_matches_closed_form() {
        let forces = zero_forces(1.0, 1000);
        let h = backward_evolve(c(0.0, 1.0), &forces, 1.0, &LoewnerConfig::default()).unwrap();
        assert!((h - c(0.0, 5f64.sqrt())).norm() < 1e-6, "{h}");
        let z = c(0.5, 0.01);
        let h = backward_evolve(z, &forces, 0.37, &LoewnerConfig::default()).unwrap();
        let mut exact = (z * z - 4.0 * 0.37).sqrt();
        if exact.im < 0.0 {
            exact = -exact;
        }
        assert!((h - exact).norm() < 1e-6, "{h} vs {exact}");
    }

    #[test]
    fn roundtrip_zero_forces() {
        let forces = zero_forces(1.0, 1000);
        let r = roundtrip_check(c(0.0, 3.0), &forces, &LoewnerConfig::default()).unwrap();
        assert!(r < 1e-6);
        let forces = zero_forces(0.2, 200);
        let r = roundtrip_check(c(0.0, 1.0), &forces, &LoewnerConfig::default()).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn imaginary_part_monotone() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let dyson = simulate_dyson(grid, 3, 4.0, &[1.0, -1.0]).unwrap();
        let forces = DrivingForces::from_dyson(&dyson);
        let traj = forward_evolve(c(0.2, 1.5), &forces, &LoewnerConfig::default()).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].im < w[0].im));
        // Backward: Im h grows with the horizon.
        let mut last = 0.0;
        for k in 0..=10 {
            let h = backward_evolve(c(0.2, 0.05), &forces, k as f64 / 10.0, &LoewnerConfig::default())
                .unwrap();
            assert!(h.im >= last);
            last = h.im;
        }
    }

    #[test]
    fn truncation_does_not_change_the_past() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let dyson = simulate_dyson(grid, 8, 2.0, &[1.0, -1.0]).unwrap();
        let forces = DrivingForces::from_dyson(&dyson);
        let short = forces.truncate(150).unwrap();
        let cfg = LoewnerConfig::default();
        let z = c(0.1, 2.0);
        let a = forward_evolve(z, &forces, &cfg).unwrap();
        let b = forward_evolve(z, &short, &cfg).unwrap();
        assert_eq!(&a.samples[..=150], &b.samples[..]);
    }

    #[test]
    fn rejects_lower_half_plane() {
        let forces = zero_forces(1.0, 10);
        assert!(matches!(
            forward_evolve(c(0.0, -1.0), &forces, &LoewnerConfig::default()),
            Err(LoewnerError::NotInUpperHalfPlane { .. })
        ));
        assert!(backward_evolve(c(0.0, 0.0), &forces, 0.5, &LoewnerConfig::default()).is_err());
        assert!(backward_evolve(c(0.0, 1.0), &forces, 2.0, &LoewnerConfig::default()).is_err());
    }
}
