//! Dyson Brownian motion
//! `dλ_j = dB_j/√2 + (2/κ) Σ_{k≠j} dt/(λ_j − λ_k)`.
//!
//! Particles are stored in strictly decreasing order `λ_1 > λ_2 > … > λ_N`.
//! Use [`to_ascending`] / [`from_ascending`] to talk to code that works with
//! the ascending Weyl chamber `x_1 < … < x_N`.

use serde::Serialize;

use super::bessel::{bessel_dimension, bessel_step, BesselPath};
use super::noise::particle_noises;
use super::{kappa_in_range, NoisePath, PathError, TimeGrid};

const MAX_HALVINGS: u32 = 20;
const NEWTON_MAX_ITER: usize = 60;

/// Ordered particle trajectories; `positions[j][i] = λ_{j+1}(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DysonPaths {
    grid: TimeGrid,
    kappa: f64,
    init: Vec<f64>,
    positions: Vec<Vec<f64>>,
}

impl DysonPaths {
    pub fn new(grid: TimeGrid, kappa: f64, positions: Vec<Vec<f64>>) -> Result<Self, PathError> {
        if positions.is_empty() {
            return Err(PathError::InvalidParameter("no particles".into()));
        }
        for p in &positions {
            if p.len() != grid.n_steps() + 1 {
                return Err(PathError::LengthMismatch {
                    expected: grid.n_steps() + 1,
                    found: p.len(),
                });
            }
        }
        let init = positions.iter().map(|p| p[0]).collect();
        let out = Self {
            grid,
            kappa,
            init,
            positions,
        };
        out.check_ordering()?;
        Ok(out)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn particle(&self, j: usize) -> &[f64] {
        &self.positions[j]
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    /// All particle positions at knot `i`.
    pub fn snapshot(&self, i: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[i]).collect()
    }

    /// `λ_i − λ_j` along the grid.
    pub fn gap(&self, i: usize, j: usize) -> Vec<f64> {
        self.positions[i]
            .iter()
            .zip(&self.positions[j])
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Smallest adjacent gap over the whole path.
    pub fn min_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.positions.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                best = best.min(a - b);
            }
        }
        best
    }

    fn check_ordering(&self) -> Result<(), PathError> {
        for i in 0..=self.grid.n_steps() {
            for w in self.positions.windows(2) {
                if !(w[0][i] > w[1][i]) {
                    return Err(PathError::OrderingViolation {
                        time: self.grid.time(i),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn to_ascending(decreasing: &[f64]) -> Vec<f64> {
    decreasing.iter().rev().copied().collect()
}

pub fn from_ascending(ascending: &[f64]) -> Vec<f64> {
    ascending.iter().rev().copied().collect()
}

fn check_init(init: &[f64]) -> Result<(), PathError> {
    if init.is_empty() {
        return Err(PathError::InvalidParameter("no particles".into()));
    }
    if init.iter().any(|x| !x.is_finite()) || init.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(PathError::InitOrder(init.to_vec()));
    }
    Ok(())
}

/// Rebuild the pair `λ_1 = (S + X)/2`, `λ_2 = (S − X)/2` from the gap `X` and
/// the sum `S_t = a1 + a2 + W'_t`.
pub fn dyson_pair_from_bessel(
    gap: &BesselPath,
    sum_noise: &NoisePath,
    a1: f64,
    a2: f64,
) -> Result<DysonPaths, PathError> {
    if !(a1 > a2) {
        return Err(PathError::InitOrder(vec![a1, a2]));
    }
    if !gap.grid().same_as(&sum_noise.grid()) {
        return Err(PathError::GridMismatch);
    }
    let start = a1 - a2;
    if (gap.start() - start).abs() > 1e-12 * start.abs().max(1.0) {
        return Err(PathError::InvalidParameter(format!(
            "gap starts at {} but a1 - a2 = {start}",
            gap.start()
        )));
    }
    let s0 = a1 + a2;
    let w = sum_noise.cumulative();
    let (upper, lower): (Vec<f64>, Vec<f64>) = gap
        .values()
        .iter()
        .zip(&w)
        .map(|(x, wp)| {
            let s = s0 + wp;
            (0.5 * (s + x), 0.5 * (s - x))
        })
        .unzip();
    let mut paths = DysonPaths::new(gap.grid(), gap.kappa(), vec![upper, lower])?;
    paths.init = vec![a1, a2];
    Ok(paths)
}

/// Simulate `N` Dyson particles with noises drawn from `seed`.
pub fn simulate_dyson(
    grid: TimeGrid,
    seed: u64,
    kappa: f64,
    init: &[f64],
) -> Result<DysonPaths, PathError> {
    let noises = particle_noises(grid, seed, init.len());
    simulate_dyson_with_noise(&noises, kappa, init)
}

/// Simulate with explicit per-particle Brownian increments `dB_j`.
///
/// `N = 2` reduces exactly to the Bessel gap plus a free sum. For `N ≥ 3` the
/// repulsion between neighbours is implicit and the rest explicit; see
/// [`implicit_neighbour_step`].
pub fn simulate_dyson_with_noise(
    noises: &[NoisePath],
    kappa: f64,
    init: &[f64],
) -> Result<DysonPaths, PathError> {
    kappa_in_range(kappa)?;
    check_init(init)?;
    if noises.len() != init.len() {
        return Err(PathError::LengthMismatch {
            expected: init.len(),
            found: noises.len(),
        });
    }
    let grid = noises[0].grid();
    if noises.iter().any(|n| !n.grid().same_as(&grid)) {
        return Err(PathError::GridMismatch);
    }
    let n = init.len();
    let dt = grid.dt();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut positions: Vec<Vec<f64>> = init
        .iter()
        .map(|&x| {
            let mut v = Vec::with_capacity(grid.n_steps() + 1);
            v.push(x);
            v
        })
        .collect();
    let mut state = init.to_vec();
    let mut db = vec![0.0; n];

    for i in 0..grid.n_steps() {
        for j in 0..n {
            db[j] = scale * noises[j].increments()[i];
        }
        match n {
            1 => state[0] += db[0],
            2 => {
                let sum = state[0] + state[1] + db[0] + db[1];
                let gap = bessel_step(state[0] - state[1], db[0] - db[1], dt, bessel_dimension(kappa))
                    .map_err(|_| PathError::OrderingViolation { time: grid.time(i + 1) })?;
                state[0] = 0.5 * (sum + gap);
                state[1] = 0.5 * (sum - gap);
            }
            _ => {
                state = step_with_halving(&state, &db, dt, kappa)
                    .ok_or(PathError::OrderingViolation { time: grid.time(i + 1) })?;
            }
        }
        if state.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(PathError::OrderingViolation {
                time: grid.time(i + 1),
            });
        }
        for (p, &x) in positions.iter_mut().zip(&state) {
            p.push(x);
        }
    }
    Ok(DysonPaths {
        grid,
        kappa,
        init: init.to_vec(),
        positions,
    })
}

/// One step, split into `2^k` equal sub-steps (increments split evenly) if the
/// implicit solve fails at the full step.
fn step_with_halving(state: &[f64], db: &[f64], dt: f64, kappa: f64) -> Option<Vec<f64>> {
    for level in 0..=MAX_HALVINGS {
        let parts = 1usize << level;
        let h = dt / parts as f64;
        let sub_db: Vec<f64> = db.iter().map(|x| x / parts as f64).collect();
        let mut s = state.to_vec();
        let mut ok = true;
        for _ in 0..parts {
            match implicit_neighbour_step(&s, &sub_db, h, kappa) {
                Some(next) => s = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(s);
        }
    }
    None
}

/// One step for `N ≥ 2` particles.
///
/// The explicit predictor `y_j = λ_j + dB_j/√2 + (2/κ) dt Σ_{|k−j|>1} 1/(λ_j − λ_k)`
/// is followed by the implicit neighbour update
/// `μ_j = y_j + c (1/(μ_j − μ_{j+1}) − 1/(μ_{j−1} − μ_j))`, `c = (2/κ) dt`.
/// The latter is the stationarity condition of the strictly convex energy
/// `Σ (μ_j − y_j)²/2 − c Σ ln(μ_j − μ_{j+1})` on the ordered chamber, so it has
/// a unique ordered solution, found here by damped Newton.
pub fn implicit_neighbour_step(state: &[f64], db: &[f64], dt: f64, kappa: f64) -> Option<Vec<f64>> {
    let n = state.len();
    let c = 2.0 * dt / kappa;
    let y: Vec<f64> = (0..n)
        .map(|j| {
            let far: f64 = (0..n)
                .filter(|&k| k + 1 < j || k > j + 1)
                .map(|k| 1.0 / (state[j] - state[k]))
                .sum();
            state[j] + db[j] + c * far
        })
        .collect();

    let energy = |mu: &[f64]| -> f64 {
        let mut e = 0.0;
        for j in 0..n {
            e += 0.5 * (mu[j] - y[j]) * (mu[j] - y[j]);
        }
        for j in 0..n - 1 {
            e -= c * (mu[j] - mu[j + 1]).ln();
        }
        e
    };
    let ordered = |mu: &[f64]| mu.windows(2).all(|w| w[0] > w[1]);

    // Translate the old (ordered) state onto the predictor's centre of mass.
    let shift = (y.iter().sum::<f64>() - state.iter().sum::<f64>()) / n as f64;
    let mut mu: Vec<f64> = state.iter().map(|x| x + shift).collect();
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale;

    let mut grad = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut e = energy(&mu);
    for _ in 0..NEWTON_MAX_ITER {
        for j in 0..n {
            grad[j] = mu[j] - y[j];
            diag[j] = 1.0;
        }
        for j in 0..n - 1 {
            let g = mu[j] - mu[j + 1];
            let inv = 1.0 / g;
            let inv2 = inv * inv;
            grad[j] -= c * inv;
            grad[j + 1] += c * inv;
            diag[j] += c * inv2;
            diag[j + 1] += c * inv2;
            off[j] = -c * inv2;
        }
        if grad.iter().all(|g| g.abs() <= tol) {
            return Some(mu);
        }
        let mut step = solve_tridiagonal(&diag, &off, &grad);
        step.iter_mut().for_each(|s| *s = -*s);
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = mu.iter().zip(&step).map(|(m, s)| m + alpha * s).collect();
            if ordered(&trial) {
                let et = energy(&trial);
                if et <= e + 1e-4 * alpha * slope || alpha * step.iter().fold(0.0f64, |m, s| m.max(s.abs())) <= tol {
                    mu = trial;
                    e = et;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    // Accept a last iterate that is converged to a slightly looser tolerance.
    if grad.iter().all(|g| g.abs() <= 1e3 * tol) && ordered(&mu) {
        Some(mu)
    } else {
        None
    }
}

/// Symmetric tridiagonal solve (Thomas algorithm). `off[j]` couples `j, j+1`.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c_prime[0] = off[0] / denom;
    }
    d_prime[0] = rhs[0] / denom;
    for j in 1..n {
        denom = diag[j] - off[j - 1] * c_prime[j - 1];
        if j + 1 < n {
            c_prime[j] = off[j] / denom;
        }
        d_prime[j] = (rhs[j] - off[j - 1] * d_prime[j - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d_prime[j] - c_prime[j] * x[j + 1];
    }
    x
}
