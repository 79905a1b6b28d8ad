use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::noise::{stream_rng, streams};
use super::{kappa_in_range, NoisePath, PathError, TimeGrid};

/// `d = 1 + 8/κ`, the dimension of the gap between two Dyson particles.
pub fn bessel_dimension(kappa: f64) -> f64 {
    1.0 + 8.0 / kappa
}

/// `ν = (d - 2)/2`; equals `4/κ - 1/2` when `d = 1 + 8/κ`.
pub fn bessel_index(dimension: f64) -> f64 {
    (dimension - 2.0) / 2.0
}

/// One semi-implicit step of `dX = ((d-1)/2) dt/X + dW`.
///
/// The drift is taken at the new point, so `x'` is the positive root of
/// `x'^2 - (x + dw) x' - (d-1) dt / 2 = 0`.
pub fn bessel_step(x: f64, dw: f64, dt: f64, d: f64) -> Result<f64, PathError> {
    if !(x > 0.0) {
        return Err(PathError::NonpositiveState { value: x });
    }
    if !(dt >= 0.0) {
        return Err(PathError::InvalidParameter(format!("dt must be nonnegative, got {dt}")));
    }
    if !(d >= 3.0) {
        return Err(PathError::InvalidParameter(format!(
            "Bessel dimension must be at least 3, got {d}"
        )));
    }
    let y = x + dw;
    let c = 2.0 * (d - 1.0) * dt;
    let root = (y * y + c).sqrt();
    // For y < 0 the textbook form cancels; use the product of roots instead.
    let next = if y >= 0.0 { 0.5 * (y + root) } else { c / (2.0 * (root - y)) };
    if next > 0.0 {
        Ok(next)
    } else {
        Err(PathError::NonpositiveState { value: next })
    }
}

/// A discretized Bessel path `X_{t_i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselPath {
    grid: TimeGrid,
    dimension: f64,
    start: f64,
    values: Vec<f64>,
}

impl BesselPath {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn index(&self) -> f64 {
        bessel_index(self.dimension)
    }

    /// The diffusivity `κ` with `d = 1 + 8/κ`.
    pub fn kappa(&self) -> f64 {
        8.0 / (self.dimension - 1.0)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has at least one value")
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn simulate_bessel(noise: &NoisePath, a: f64, d: f64) -> Result<BesselPath, PathError> {
    if !(a > 0.0) {
        return Err(PathError::NonpositiveState { value: a });
    }
    let grid = noise.grid();
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    let mut x = a;
    values.push(x);
    for &dw in noise.increments() {
        x = bessel_step(x, dw, dt, d)?;
        values.push(x);
    }
    Ok(BesselPath {
        grid,
        dimension: d,
        start: a,
        values,
    })
}

/// Two Bessel paths of the same dimension started at `a` and `b`, driven by
/// one Wiener path.
pub fn simulate_coupled_bessel_starts(
    noise: &NoisePath,
    a: f64,
    b: f64,
    d: f64,
) -> Result<(BesselPath, BesselPath), PathError> {
    Ok((simulate_bessel(noise, a, d)?, simulate_bessel(noise, b, d)?))
}

/// Bessel paths of dimensions `1 + 8/κ` and `1 + 8/κ*` from the same start,
/// driven by one Wiener path.
pub fn simulate_coupled_bessel_dims(
    noise: &NoisePath,
    a: f64,
    kappa: f64,
    kappa_star: f64,
) -> Result<(BesselPath, BesselPath), PathError> {
    kappa_in_range(kappa)?;
    kappa_in_range(kappa_star)?;
    if kappa > kappa_star {
        return Err(PathError::ParamOrder { kappa, kappa_star });
    }
    Ok((
        simulate_bessel(noise, a, bessel_dimension(kappa))?,
        simulate_bessel(noise, a, bessel_dimension(kappa_star))?,
    ))
}

/// Minimum of a Brownian bridge from `u` to `v` over a step of length `dt`,
/// sampled with the uniform `unif ∈ (0, 1]`.
pub(crate) fn bridge_minimum(u: f64, v: f64, dt: f64, unif: f64) -> f64 {
    let diff = u - v;
    0.5 * (u + v - (diff * diff - 2.0 * dt * unif.ln()).sqrt())
}

/// Pathwise infimum of the continuous process behind `path`, with each grid
/// step filled in by a Brownian bridge. Uniforms come from
/// `(seed, streams::BRIDGE + offset)`.
pub fn bridged_infimum(path: &BesselPath, seed: u64, offset: u64) -> f64 {
    bridged_infimum_values(path.values(), path.grid().dt(), seed, offset)
}

fn bridged_infimum_values(values: &[f64], dt: f64, seed: u64, offset: u64) -> f64 {
    let mut rng = stream_rng(seed, streams::BRIDGE + offset);
    let mut best = values[0];
    for w in values.windows(2) {
        // Draw for every step so that the stream stays aligned across paths.
        let unif: f64 = 1.0 - rng.random::<f64>();
        let m = bridge_minimum(w[0], w[1], dt, unif);
        if m < best {
            best = m;
        }
    }
    best.max(0.0)
}

/// Continue `path` from its terminal value over `(T, T + extension.horizon]`.
pub fn extend_bessel(path: &BesselPath, extension: &NoisePath) -> Result<BesselPath, PathError> {
    simulate_bessel(extension, path.terminal(), path.dimension())
}

/// Setting for approximating `M_∞ = inf_{t ≥ 0} X_t`.
///
/// The path is continued on a fixed grid of step `dt_long` up to `T_long`,
/// then with steps `far_ratio·X²` (the natural time scale of a path at height
/// `X`) up to `T_far`. Every step is filled in with a Brownian-bridge minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongRunSpec {
    /// `T_long`, measured from time 0.
    pub t_long: f64,
    /// Step used on `(T, T_long]`.
    pub dt_long: f64,
    /// End of the adaptive continuation; `t_far <= t_long` disables it.
    pub t_far: f64,
    pub far_ratio: f64,
}

impl LongRunSpec {
    /// `T_long = 100·a²` with a step of `10·dt`, `T_far = 10⁴·T_long`.
    pub fn default_for(a: f64, dt: f64) -> Self {
        let t_long = 100.0 * a * a;
        Self {
            t_long,
            dt_long: 10.0 * dt,
            t_far: 1e4 * t_long,
            far_ratio: 1e-3,
        }
    }

    /// Grid of the extension beyond `horizon`, or `None` if `T_long <= horizon`.
    pub fn extension_grid(&self, horizon: f64) -> Result<Option<TimeGrid>, PathError> {
        let rest = self.t_long - horizon;
        if rest <= 0.0 {
            return Ok(None);
        }
        TimeGrid::with_step(rest, self.dt_long.min(rest)).map(Some)
    }
}

/// Nested bridge-corrected infima of one path and its continuations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongRunInfimum {
    /// Over `[0, T]`.
    pub horizon: f64,
    /// Over `[0, max(T, T_long)]`.
    pub long: f64,
    /// Over `[0, max(T, T_long, T_far)]`; the estimate of `M_∞`.
    pub far: f64,
}

/// Infimum of the adaptive continuation from `x0` over a time span `span`.
fn far_tail_infimum(x0: f64, d: f64, span: f64, ratio: f64, seed: u64) -> Result<f64, PathError> {
    let mut rng = stream_rng(seed, streams::FAR_TAIL);
    let mut x = x0;
    let mut best = x0;
    let mut elapsed = 0.0;
    while elapsed < span {
        let dt = (ratio * x * x).min(span - elapsed);
        let z: f64 = rng.sample(StandardNormal);
        let next = bessel_step(x, dt.sqrt() * z, dt, d)?;
        let unif: f64 = 1.0 - rng.random::<f64>();
        best = best.min(bridge_minimum(x, next, dt, unif));
        x = next;
        elapsed += dt;
    }
    Ok(best.max(0.0))
}

/// Bridge-corrected infima of `path` continued according to `spec`. The
/// continuation noise comes from the streams [`streams::EXTENSION`] and
/// [`streams::FAR_TAIL`] of `seed`, so two paths of different dimension with
/// the same seed share the fixed-grid continuation noise.
pub fn long_run_infimum(
    path: &BesselPath,
    spec: &LongRunSpec,
    seed: u64,
) -> Result<LongRunInfimum, PathError> {
    let head = bridged_infimum(path, seed, 0);
    let horizon = path.grid().horizon();
    let (long, end_value, end_time) = match spec.extension_grid(horizon)? {
        None => (head, path.terminal(), horizon),
        Some(grid) => {
            let noise = super::noise::sample_noise_stream(grid, seed, streams::EXTENSION);
            let tail = extend_bessel(path, &noise)?;
            (head.min(bridged_infimum(&tail, seed, 1)), tail.terminal(), spec.t_long)
        }
    };
    let far = if spec.t_far > end_time {
        let span = spec.t_far - end_time;
        long.min(far_tail_infimum(end_value, path.dimension(), span, spec.far_ratio, seed)?)
    } else {
        long
    };
    Ok(LongRunInfimum {
        horizon: head,
        long,
        far,
    })
}
