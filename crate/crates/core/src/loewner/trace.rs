use num_complex::Complex64;
use serde::Serialize;

use super::{backward_evolve, DrivingForces, LoewnerConfig, LoewnerError};
use crate::geometry::polyline_distance;

/// Two extracted curves that came closer than the requested resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntersectionWarning {
    pub curve_a: usize,
    pub curve_b: usize,
    pub distance: f64,
}

/// Per-curve polylines `γ_j(t_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub times: Vec<f64>,
    /// `curves[j][k] = γ_j(times[k])`.
    pub curves: Vec<Vec<Complex64>>,
    pub offset: f64,
    pub warnings: Vec<IntersectionWarning>,
}

impl Trace {
    /// Curve pairs closer than `tol`.
    pub fn close_pairs(&self, tol: f64) -> Vec<IntersectionWarning> {
        let mut out = Vec::new();
        for a in 0..self.curves.len() {
            for b in a + 1..self.curves.len() {
                let distance = polyline_distance(&self.curves[a], &self.curves[b]);
                if distance < tol {
                    out.push(IntersectionWarning {
                        curve_a: a,
                        curve_b: b,
                        distance,
                    });
                }
            }
        }
        out
    }

    /// Smallest distance between distinct curves.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.curves.len() {
            for b in a + 1..self.curves.len() {
                best = best.min(polyline_distance(&self.curves[a], &self.curves[b]));
            }
        }
        best
    }
}

/// Default trace offset `10⁻³·√T`.
pub fn default_trace_offset(horizon: f64) -> f64 {
    1e-3 * horizon.sqrt()
}

/// `γ_j(t) ≈ h^{(t)}_t(λ_j(t) + iδ)`, where `h^{(t)}` is the backward chain
/// for horizon `t`, evaluated at the knots `sample_indices`.
///
/// Curves closer than `tol_x` are recorded in `warnings`; this is not an error.
pub fn trace_extract(
    forces: &DrivingForces,
    sample_indices: &[usize],
    offset: f64,
    tol_x: f64,
    cfg: &LoewnerConfig,
) -> Result<Trace, LoewnerError> {
    if !(offset > 0.0) {
        return Err(LoewnerError::InvalidOffset(offset));
    }
    let grid = forces.grid();
    let mut times = Vec::with_capacity(sample_indices.len());
    let mut curves = vec![Vec::with_capacity(sample_indices.len()); forces.n_forces()];
    for &k in sample_indices {
        if k > grid.n_steps() {
            return Err(LoewnerError::HorizonOutOfRange { t: k as f64 });
        }
        let t = grid.time(k);
        times.push(t);
        for (j, curve) in curves.iter_mut().enumerate() {
            let tip = Complex64::new(forces.path(j)[k], offset);
            curve.push(backward_evolve(tip, forces, t, cfg)?);
        }
    }
    let mut trace = Trace {
        times,
        curves,
        offset,
        warnings: Vec::new(),
    };
    trace.warnings = trace.close_pairs(tol_x);
    Ok(trace)
}

/// Evenly spaced knot indices `0, s, 2s, …, n` with about `count` samples.
pub fn sample_indices(n_steps: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, n_steps.max(1));
    let mut out: Vec<usize> = (0..=count).map(|k| k * n_steps / count).collect();
    out.dedup();
    out
}

/// The hull `K_T ∪ ℝ` as trace polylines plus the real segment `[−L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullPolyline {
    pub curves: Vec<Vec<Complex64>>,
    pub clip: f64,
}

impl HullPolyline {
    pub fn from_trace(trace: &Trace, clip: f64) -> Self {
        Self {
            curves: trace.curves.clone(),
            clip,
        }
    }

    /// `L = max_j sup_t |λ_j| + 4√T`.
    pub fn default_clip(forces: &DrivingForces) -> f64 {
        forces.max_abs() + 4.0 * forces.grid().horizon().sqrt()
    }

    /// All pieces as polylines; the last one is the real segment.
    pub fn polylines(&self) -> Vec<Vec<Complex64>> {
        let mut out = self.curves.clone();
        out.push(vec![Complex64::new(-self.clip, 0.0), Complex64::new(self.clip, 0.0)]);
        out
    }

    /// Largest distance of a curve vertex from the origin.
    pub fn radius(&self) -> f64 {
        self.curves
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }
}
