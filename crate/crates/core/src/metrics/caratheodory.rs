use num_complex::Complex64;
use serde::Serialize;

use super::{CompactGridSpec, MetricsError};
use crate::loewner::{forward_evolve, DrivingForces, LoewnerConfig, LoewnerError, MapTrajectory};

/// Forward trajectories `t ↦ g_t(z)` of every point of a compact grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFlow {
    pub points: Vec<Complex64>,
    pub trajectories: Vec<MapTrajectory>,
}

impl GridFlow {
    /// Swallowed points are kept; see [`GridFlow::require_alive`].
    pub fn evaluate(
        forces: &DrivingForces,
        grid: &CompactGridSpec,
        cfg: &LoewnerConfig,
    ) -> Result<Self, MetricsError> {
        let points = grid.points();
        let trajectories = points
            .iter()
            .map(|&z| forward_evolve(z, forces, cfg))
            .collect::<Result<Vec<_>, LoewnerError>>()?;
        Ok(Self {
            points,
            trajectories,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.samples.len())
    }

    pub fn alive(&self, i: usize) -> bool {
        self.trajectories[i].is_alive()
    }

    pub fn n_swallowed(&self) -> usize {
        self.trajectories.iter().filter(|t| !t.is_alive()).count()
    }

    pub fn require_alive(&self) -> Result<(), MetricsError> {
        for (z, traj) in self.points.iter().zip(&self.trajectories) {
            if let Some(time) = traj.swallowed_at {
                return Err(MetricsError::GridIntersectsHull {
                    re: z.re,
                    im: z.im,
                    time,
                });
            }
        }
        Ok(())
    }

    /// `min_z Im g_{t_k}(z)` over the points alive at the end.
    pub fn min_im_at(&self, k: usize) -> f64 {
        self.trajectories
            .iter()
            .filter(|t| t.is_alive())
            .map(|t| t.samples[k].im)
            .fold(f64::INFINITY, f64::min)
    }

    fn check_compatible(&self, other: &GridFlow) -> Result<(), MetricsError> {
        if self.points != other.points {
            return Err(MetricsError::InvalidParameter("flows use different grids".into()));
        }
        Ok(())
    }

    /// `max_{k ≤ K} |g¹_{t_k}(z) − g²_{t_k}(z)|` for each `K`, over the points
    /// selected by `keep`.
    fn profile(&self, other: &GridFlow, keep: &dyn Fn(usize) -> bool) -> Vec<f64> {
        let n = self.n_samples().min(other.n_samples());
        let mut per_time = vec![0.0f64; n];
        for i in 0..self.points.len() {
            if !keep(i) {
                continue;
            }
            let (a, b) = (&self.trajectories[i].samples, &other.trajectories[i].samples);
            for (k, slot) in per_time.iter_mut().enumerate() {
                *slot = slot.max((a[k] - b[k]).norm());
            }
        }
        let mut running = 0.0f64;
        per_time
            .into_iter()
            .map(|d| {
                running = running.max(d);
                running
            })
            .collect()
    }

    /// Running sup over `[0, t_k] × G` of `|g¹ − g²|`, indexed by `k`.
    pub fn distance_profile(&self, other: &GridFlow) -> Result<Vec<f64>, MetricsError> {
        self.check_compatible(other)?;
        self.require_alive()?;
        other.require_alive()?;
        Ok(self.profile(other, &|_| true))
    }
}

/// `sup_{[0,T]×G} |g¹_t(z) − g²_t(z)|` on the knot times and grid points.
pub fn caratheodory_distance(
    forces1: &DrivingForces,
    forces2: &DrivingForces,
    grid: &CompactGridSpec,
    cfg: &LoewnerConfig,
) -> Result<f64, MetricsError> {
    let a = GridFlow::evaluate(forces1, grid, cfg)?;
    let b = GridFlow::evaluate(forces2, grid, cfg)?;
    Ok(*a.distance_profile(&b)?.last().unwrap_or(&0.0))
}

/// Distance over the grid points swallowed by neither chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedDistance {
    pub distance: f64,
    /// `min Im g_T(z)` over the retained points and both chains.
    pub delta1: f64,
    pub retained: usize,
    pub excluded: usize,
}

pub fn caratheodory_restricted(a: &GridFlow, b: &GridFlow) -> Result<RestrictedDistance, MetricsError> {
    a.check_compatible(b)?;
    let keep = |i: usize| a.alive(i) && b.alive(i);
    let retained = (0..a.points.len()).filter(|&i| keep(i)).count();
    if retained == 0 {
        a.require_alive()?;
        b.require_alive()?;
    }
    let distance = *a.profile(b, &keep).last().unwrap_or(&0.0);
    let delta1 = (0..a.points.len())
        .filter(|&i| keep(i))
        .flat_map(|i| {
            [
                a.trajectories[i].samples.last().unwrap().im,
                b.trajectories[i].samples.last().unwrap().im,
            ]
        })
        .fold(f64::INFINITY, f64::min);
    Ok(RestrictedDistance {
        distance,
        delta1,
        retained,
        excluded: a.points.len() - retained,
    })
}

/// `δ₁ = min Im g_T(z)` over the grid and all chains.
pub fn delta1_estimate(flows: &[&GridFlow]) -> Result<f64, MetricsError> {
    let mut best = f64::INFINITY;
    for flow in flows {
        flow.require_alive()?;
        best = best.min(flow.min_im_at(flow.n_samples() - 1));
    }
    Ok(best)
}

/// `C(T, G) = (δ₂ / max{δ₁, √((δ₂² − 4T)⁺)})^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaratheodoryConstant {
    pub delta1: f64,
    pub delta2: f64,
    pub horizon: f64,
    pub n: usize,
    pub value: f64,
}

pub fn constant_ctg(delta1: f64, delta2: f64, horizon: f64, n: usize) -> CaratheodoryConstant {
    let floor = (delta2 * delta2 - 4.0 * horizon).max(0.0).sqrt();
    let value = (delta2 / delta1.max(floor)).powi(n as i32);
    CaratheodoryConstant {
        delta1,
        delta2,
        horizon,
        n,
        value,
    }
}

/// Restricted distances on `G` and on its refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementCheck {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    pub under_resolved: bool,
}

pub fn refinement_check(
    forces1: &DrivingForces,
    forces2: &DrivingForces,
    grid: &CompactGridSpec,
    cfg: &LoewnerConfig,
) -> Result<RefinementCheck, MetricsError> {
    let distance = |g: &CompactGridSpec| -> Result<f64, MetricsError> {
        let a = GridFlow::evaluate(forces1, g, cfg)?;
        let b = GridFlow::evaluate(forces2, g, cfg)?;
        Ok(caratheodory_restricted(&a, &b)?.distance)
    };
    let coarse = distance(grid)?;
    let fine = distance(&grid.refined())?;
    let relative_change = if fine > 0.0 { (fine - coarse).abs() / fine } else { 0.0 };
    Ok(RefinementCheck {
        coarse,
        fine,
        relative_change,
        under_resolved: relative_change >= 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_dyson, TimeGrid};

    fn grid(y0: f64, y1: f64) -> CompactGridSpec {
        CompactGridSpec::new(-1.0, 1.0, y0, y1, 3, 3).unwrap()
    }

    #[test]
    fn constant_examples() {
        assert!((constant_ctg(0.5, 1.0, 1.0, 2).value - 4.0).abs() < 1e-15);
        let c = constant_ctg(0.1, 10.0, 1.0, 2).value;
        assert!((c - 100.0 / 96.0).abs() < 1e-12);
        assert!((c - 1.0417).abs() < 1e-4);
        assert_eq!(constant_ctg(2.0, 2.0, 0.0, 3).value, 1.0);
        assert!(constant_ctg(0.3, 1.0, 1.0, 2).value >= constant_ctg(0.6, 1.0, 1.0, 2).value);
    }

    #[test]
    fn identical_chains_have_zero_distance() {
        let tg = TimeGrid::new(1.0, 200).unwrap();
        let dyson = simulate_dyson(tg, 1, 4.0, &[1.0, -1.0]).unwrap();
        let f = DrivingForces::from_dyson(&dyson);
        let g = grid(2.5, 3.5);
        let d = caratheodory_distance(&f, &f, &g, &LoewnerConfig::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn offset_forces_within_prop_bound() {
        let tg = TimeGrid::new(1.0, 1000).unwrap();
        let cfg = LoewnerConfig::default();
        let f1 = DrivingForces::constant(tg, &[0.0, 0.0]).unwrap();
        let f2 = f1.shifted(0.01);
        let g = grid(2.5, 3.5);
        let a = GridFlow::evaluate(&f1, &g, &cfg).unwrap();
        let b = GridFlow::evaluate(&f2, &g, &cfg).unwrap();
        let profile = a.distance_profile(&b).unwrap();
        assert_eq!(profile[0], 0.0);
        assert!(profile.windows(2).all(|w| w[0] <= w[1]));
        let d = *profile.last().unwrap();
        let delta1 = delta1_estimate(&[&a, &b]).unwrap();
        // Closed form √(z² + 4T), smallest above the slit: √(4 − 6.25) = 1.5i.
        let oracle = (Complex64::new(0.0, 2.5).powi(2) + 4.0).sqrt().im;
        assert_eq!(oracle, 1.5);
        assert!((delta1 - oracle).abs() < 1e-6, "{delta1} vs {oracle}");
        let c = constant_ctg(delta1, g.delta2(), 1.0, 2);
        assert!(d > 0.0 && d <= c.value * 0.02, "{d} vs {}", c.value * 0.02);
    }

    #[test]
    fn slit_through_grid_is_reported() {
        let tg = TimeGrid::new(1.0, 1000).unwrap();
        let cfg = LoewnerConfig::default();
        let f1 = DrivingForces::constant(tg, &[0.0, 0.0]).unwrap();
        let f2 = f1.shifted(0.01);
        let g = grid(1.0, 2.0);
        assert!(matches!(
            caratheodory_distance(&f1, &f2, &g, &cfg),
            Err(MetricsError::GridIntersectsHull { .. })
        ));
        let a = GridFlow::evaluate(&f1, &g, &cfg).unwrap();
        let b = GridFlow::evaluate(&f2, &g, &cfg).unwrap();
        let r = caratheodory_restricted(&a, &b).unwrap();
        assert_eq!(r.retained + r.excluded, 9);
        assert!(r.excluded >= 1);
        assert!(r.delta1 > 0.0);
    }

    #[test]
    fn delta1_at_start_is_y_min() {
        let tg = TimeGrid::new(1.0, 100).unwrap();
        let f = DrivingForces::constant(tg, &[0.0]).unwrap();
        let flow = GridFlow::evaluate(&f, &grid(3.0, 4.0), &LoewnerConfig::default()).unwrap();
        assert_eq!(flow.min_im_at(0), 3.0);
        assert!(delta1_estimate(&[&flow]).unwrap() <= 4.0);
    }
}
