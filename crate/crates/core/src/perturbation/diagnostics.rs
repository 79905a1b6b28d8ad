use serde::Serialize;

use super::init::coupled_init_pair;
use super::kappa::coupled_kappa_pair;
use super::{cumulative_trapezoid, PerturbationError};
use crate::loewner::{DrivingForces, LoewnerConfig};
use crate::metrics::{caratheodory_restricted, constant_ctg, CompactGridSpec, GridFlow};
use crate::parallel::map_paths;
use crate::paths::{particle_noises, DysonPaths, TimeGrid};

/// Interaction term `Q^{i,j}` and the exponential identity for the gap
/// difference `X^{i,j} − Y^{i,j}` of two `N ≥ 3` systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSeries {
    pub times: Vec<f64>,
    /// `None` where `X^{i,j} = Y^{i,j}`.
    pub q: Vec<Option<f64>>,
    /// `X^{i,j}_t − Y^{i,j}_t`.
    pub lhs: Vec<f64>,
    /// `(a_ij − b_ij)·exp(−(4/κ)∫ ds/(X^{i,j}Y^{i,j}) − (2/κ)∫ Q ds)`.
    pub rhs: Vec<f64>,
    pub residual: f64,
    pub degenerate: Vec<bool>,
}

impl QSeries {
    pub fn n_degenerate(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

/// `Q^{i,j}` for particle indices `i ≠ j` (0-based) with signed gaps
/// `X^{p,q} = λ_p − λ_q`. Undefined points contribute nothing to `∫ Q`.
pub fn q_diagnostic(
    original: &DysonPaths,
    perturbed: &DysonPaths,
    i: usize,
    j: usize,
) -> Result<QSeries, PerturbationError> {
    let n = original.n_particles();
    if n < 3 {
        return Err(PerturbationError::TooFewParticles(n));
    }
    if perturbed.n_particles() != n
        || perturbed.grid() != original.grid()
        || perturbed.kappa() != original.kappa()
    {
        return Err(PerturbationError::ConfigInvalid(
            "systems differ in size, grid or kappa".into(),
        ));
    }
    if i >= n || j >= n || i == j {
        return Err(PerturbationError::ConfigInvalid(format!(
            "need distinct particle indices below {n}, got ({i}, {j})"
        )));
    }
    let grid = original.grid();
    let kappa = original.kappa();
    let x = |p: usize, q: usize, t: usize| original.particle(p)[t] - original.particle(q)[t];
    let y = |p: usize, q: usize, t: usize| perturbed.particle(p)[t] - perturbed.particle(q)[t];
    let ratio = |p: usize, q: usize, t: usize| {
        let (u, v) = (x(p, q, t), y(p, q, t));
        (u - v) / (u * v)
    };
    let steps = grid.n_steps() + 1;
    let mut q = Vec::with_capacity(steps);
    let mut lhs = Vec::with_capacity(steps);
    let mut degenerate = Vec::with_capacity(steps);
    let mut integrand = Vec::with_capacity(steps);
    for t in 0..steps {
        let d = x(i, j, t) - y(i, j, t);
        lhs.push(d);
        let value = if d == 0.0 {
            None
        } else {
            let s: f64 = (0..n)
                .filter(|&k| k != i && k != j)
                .map(|k| ratio(i, k, t) - ratio(j, k, t))
                .sum();
            Some(s / d)
        };
        degenerate.push(value.is_none());
        integrand.push(4.0 / kappa / (x(i, j, t) * y(i, j, t)) + 2.0 / kappa * value.unwrap_or(0.0));
        q.push(value);
    }
    let exponent = cumulative_trapezoid(&integrand, grid.dt());
    let start = lhs[0];
    let rhs: Vec<f64> = exponent.iter().map(|e| start * (-e).exp()).collect();
    let residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    Ok(QSeries {
        times: grid.times(),
        q,
        lhs,
        rhs,
        residual,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Parameters are initial-value offsets `ε_n`; `b = (a1 + 0.8ε, a2 − 0.8ε)`.
    Init,
    /// Parameters are diffusivity gaps `κ_n − κ`.
    Kappa,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSetup {
    pub mode: SweepMode,
    pub init: [f64; 2],
    pub kappa: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
    pub compact: CompactGridSpec,
    pub loewner: LoewnerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub mean_distance: f64,
    pub max_distance: f64,
    /// Paths whose distance exceeds `4C(T,G)ε` (initial-value mode only).
    pub violations: Option<usize>,
    pub excluded_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
    /// Mean distances never increase along the sequence.
    pub nonincreasing: bool,
}

/// Carathéodory distances on a fixed grid for a decreasing sequence of
/// perturbation sizes, with the same seeds for every entry.
pub fn convergence_sweep(
    setup: &SweepSetup,
    parameters: &[f64],
) -> Result<SweepTable, PerturbationError> {
    if parameters.iter().any(|&p| !(p > 0.0)) || parameters.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(PerturbationError::ConfigInvalid(
            "sweep parameters must be positive and strictly decreasing".into(),
        ));
    }
    let [a1, a2] = setup.init;
    let mut rows = Vec::with_capacity(parameters.len());
    for &p in parameters {
        if setup.mode == SweepMode::Init && !(p < (a1 - a2) / 3.0) {
            return Err(PerturbationError::ConfigInvalid(format!(
                "epsilon must satisfy epsilon < (a1 - a2)/3, got {p}"
            )));
        }
        if setup.mode == SweepMode::Kappa && !(setup.kappa + p <= 4.0) {
            return Err(PerturbationError::ConfigInvalid(format!(
                "kappa + {p} exceeds 4"
            )));
        }
        let per_path = map_paths(setup.n_paths, |path| {
            let seed = setup.seed.wrapping_add(path as u64);
            let noises = particle_noises(setup.grid, seed, 2);
            let (f1, f2) = match setup.mode {
                SweepMode::Init => {
                    let b = [a1 + 0.8 * p, a2 - 0.8 * p];
                    let pair = coupled_init_pair(setup.init, b, setup.kappa, &noises)?;
                    (DrivingForces::from_dyson(&pair.original), DrivingForces::from_dyson(&pair.perturbed))
                }
                SweepMode::Kappa => {
                    let pair = coupled_kappa_pair(setup.init, setup.kappa, setup.kappa + p, &noises)?;
                    (DrivingForces::from_dyson(&pair.original), DrivingForces::from_dyson(&pair.perturbed))
                }
            };
            let g1 = GridFlow::evaluate(&f1, &setup.compact, &setup.loewner)?;
            let g2 = GridFlow::evaluate(&f2, &setup.compact, &setup.loewner)?;
            let r = caratheodory_restricted(&g1, &g2)?;
            let c = constant_ctg(r.delta1, setup.compact.delta2(), setup.grid.horizon(), 2).value;
            Ok::<_, PerturbationError>((r.distance, r.excluded, r.distance > 4.0 * c * p))
        })?;
        let n = per_path.len().max(1) as f64;
        rows.push(SweepRow {
            parameter: p,
            mean_distance: per_path.iter().map(|r| r.0).sum::<f64>() / n,
            max_distance: per_path.iter().map(|r| r.0).fold(0.0, f64::max),
            violations: (setup.mode == SweepMode::Init)
                .then(|| per_path.iter().filter(|r| r.2).count()),
            excluded_points: per_path.iter().map(|r| r.1).sum(),
        });
    }
    let nonincreasing = rows.windows(2).all(|w| w[1].mean_distance <= w[0].mean_distance);
    Ok(SweepTable {
        mode: setup.mode,
        rows,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_dyson_with_noise, NoisePath};

    fn systems(b: &[f64], noises: &[NoisePath]) -> (DysonPaths, DysonPaths) {
        (
            simulate_dyson_with_noise(noises, 2.0, &[2.0, 0.0, -2.0]).unwrap(),
            simulate_dyson_with_noise(noises, 2.0, b).unwrap(),
        )
    }

    fn fine_noises(seed: u64) -> Vec<NoisePath> {
        particle_noises(TimeGrid::new(0.5, 2000).unwrap(), seed, 3)
    }

    #[test]
    fn zero_perturbation_degenerates() {
        let (x, y) = systems(&[2.0, 0.0, -2.0], &fine_noises(1));
        let s = q_diagnostic(&x, &y, 0, 1).unwrap();
        assert_eq!(s.n_degenerate(), s.times.len());
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn two_particles_rejected() {
        let grid = TimeGrid::new(0.5, 10).unwrap();
        let noises = particle_noises(grid, 1, 2);
        let x = simulate_dyson_with_noise(&noises, 2.0, &[1.0, -1.0]).unwrap();
        assert!(matches!(
            q_diagnostic(&x, &x, 0, 1),
            Err(PerturbationError::TooFewParticles(2))
        ));
    }

    #[test]
    fn identity_residual_shrinks_with_step() {
        let b = [2.05, 0.02, -1.97];
        for seed in 0..3 {
            let fine = fine_noises(seed);
            let coarse: Vec<NoisePath> = fine.iter().map(|n| n.coarsen(2).unwrap()).collect();
            let (xf, yf) = systems(&b, &fine);
            let (xc, yc) = systems(&b, &coarse);
            let rf = q_diagnostic(&xf, &yf, 0, 1).unwrap();
            let rc = q_diagnostic(&xc, &yc, 0, 1).unwrap();
            assert_eq!(rf.n_degenerate(), 0);
            assert!(rf.residual < 0.05 * 0.03, "{}", rf.residual);
            assert!(rf.residual < rc.residual, "{} vs {}", rf.residual, rc.residual);
        }
    }

    #[test]
    fn sweep_rejects_bad_sequences() {
        let setup = SweepSetup {
            mode: SweepMode::Init,
            init: [1.0, -1.0],
            kappa: 4.0,
            grid: TimeGrid::new(0.5, 100).unwrap(),
            seed: 0,
            n_paths: 2,
            compact: CompactGridSpec::new(-1.0, 1.0, 2.0, 3.0, 2, 2).unwrap(),
            loewner: LoewnerConfig::default(),
        };
        assert!(convergence_sweep(&setup, &[0.1, 0.2]).is_err());
        assert!(convergence_sweep(&setup, &[]).unwrap().rows.is_empty());
        let t = convergence_sweep(&setup, &[0.1, 0.05, 0.025]).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| r.violations == Some(0)));
        assert!(t.nonincreasing);
    }
}
