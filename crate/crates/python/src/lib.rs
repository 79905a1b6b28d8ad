//! Python bindings: `import msle`.

use std::collections::BTreeMap;

use msle_core::experiment::{self, parse_config_str};
use msle_core::loewner::{self, LoewnerConfig};
use msle_core::metrics;
use msle_core::paths::{self, TimeGrid};
use msle_core::verify::{run_criterion, VerifySettings};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid(horizon: f64, dt: f64) -> PyResult<TimeGrid> {
    TimeGrid::with_step(horizon, dt).map_err(value_error)
}

/// Dyson driving forces on a uniform grid, stored in decreasing order.
#[pyclass(frozen, module = "msle")]
struct DysonPaths {
    inner: paths::DysonPaths,
}

#[pymethods]
impl DysonPaths {
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.grid().times()
    }

    #[getter]
    fn positions(&self) -> Vec<Vec<f64>> {
        self.inner.positions().to_vec()
    }

    fn particle(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.n_particles() {
            return Err(value_error(format!("particle index {j} out of range")));
        }
        Ok(self.inner.particle(j).to_vec())
    }

    fn min_gap(&self) -> f64 {
        self.inner.min_gap()
    }

    fn __len__(&self) -> usize {
        self.inner.n_particles()
    }
}

/// Piecewise-linear driving forces for the Loewner flow.
#[pyclass(frozen, module = "msle")]
struct DrivingForces {
    inner: loewner::DrivingForces,
}

#[pymethods]
impl DrivingForces {
    #[new]
    #[pyo3(signature = (paths, horizon = 1.0))]
    fn new(paths: Vec<Vec<f64>>, horizon: f64) -> PyResult<Self> {
        let steps = paths.first().map_or(0, |p| p.len().saturating_sub(1));
        let g = TimeGrid::new(horizon, steps).map_err(value_error)?;
        Ok(Self {
            inner: loewner::DrivingForces::new(g, paths).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_dyson(paths: &DysonPaths) -> Self {
        Self {
            inner: loewner::DrivingForces::from_dyson(&paths.inner),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (values, horizon = 1.0, dt = 1e-3))]
    fn constant(values: Vec<f64>, horizon: f64, dt: f64) -> PyResult<Self> {
        Ok(Self {
            inner: loewner::DrivingForces::constant(grid(horizon, dt)?, &values).map_err(value_error)?,
        })
    }

    fn shifted(&self, offset: f64) -> Self {
        Self {
            inner: self.inner.shifted(offset),
        }
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.grid().horizon()
    }

    fn __len__(&self) -> usize {
        self.inner.n_forces()
    }
}

#[pyfunction]
#[pyo3(signature = (kappa, init, horizon = 1.0, dt = 1e-3, seed = 0))]
fn simulate_dyson(kappa: f64, init: Vec<f64>, horizon: f64, dt: f64, seed: u64) -> PyResult<DysonPaths> {
    let inner = paths::simulate_dyson(grid(horizon, dt)?, seed, kappa, &init).map_err(value_error)?;
    Ok(DysonPaths { inner })
}

/// Bessel path of dimension `d` started at `a`.
#[pyfunction]
#[pyo3(signature = (a, d, horizon = 1.0, dt = 1e-3, seed = 0))]
fn simulate_bessel(a: f64, d: f64, horizon: f64, dt: f64, seed: u64) -> PyResult<Vec<f64>> {
    let noise = paths::sample_noise(grid(horizon, dt)?, seed);
    Ok(paths::simulate_bessel(&noise, a, d).map_err(value_error)?.values().to_vec())
}

#[pyfunction]
fn bessel_dimension(kappa: f64) -> f64 {
    paths::bessel_dimension(kappa)
}

/// Returns `(times, samples, swallowed_at)`.
#[pyfunction]
fn forward_evolve(z: Complex64, forces: &DrivingForces) -> PyResult<(Vec<f64>, Vec<Complex64>, Option<f64>)> {
    let tr = loewner::forward_evolve(z, &forces.inner, &LoewnerConfig::default()).map_err(value_error)?;
    Ok((tr.times, tr.samples, tr.swallowed_at))
}

#[pyfunction]
#[pyo3(signature = (z, forces, horizon = None))]
fn backward_evolve(z: Complex64, forces: &DrivingForces, horizon: Option<f64>) -> PyResult<Complex64> {
    let t = horizon.unwrap_or_else(|| forces.inner.grid().horizon());
    loewner::backward_evolve(z, &forces.inner, t, &LoewnerConfig::default()).map_err(value_error)
}

#[pyfunction]
fn roundtrip_check(z: Complex64, forces: &DrivingForces) -> PyResult<f64> {
    loewner::roundtrip_check(z, &forces.inner, &LoewnerConfig::default()).map_err(value_error)
}

/// Returns `(times, curves)` with `curves[j][k]` a point of curve `j`.
#[pyfunction]
#[pyo3(signature = (forces, samples = 200, offset = None))]
fn trace_extract(
    forces: &DrivingForces,
    samples: usize,
    offset: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let g = forces.inner.grid();
    let offset = offset.unwrap_or_else(|| loewner::default_trace_offset(g.horizon()));
    let knots = loewner::sample_indices(g.n_steps(), samples);
    let tr = loewner::trace_extract(&forces.inner, &knots, offset, 0.0, &LoewnerConfig::default())
        .map_err(value_error)?;
    Ok((tr.times, tr.curves))
}

#[pyfunction]
fn constant_ctg(delta1: f64, delta2: f64, horizon: f64, n: usize) -> f64 {
    metrics::constant_ctg(delta1, delta2, horizon, n).value
}

#[pyfunction]
fn hausdorff_sets(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<f64> {
    metrics::hausdorff_sets(&a, &b).map_err(value_error)
}

/// Run a configuration (flat `key = value` text) and write its artifacts.
/// Returns `(pass, claims, artifacts)`.
#[pyfunction]
#[pyo3(signature = (config, overrides = None))]
fn run_experiment(
    config: &str,
    overrides: Option<BTreeMap<String, String>>,
) -> PyResult<(bool, Vec<(String, bool)>, Vec<String>)> {
    let overrides: Vec<_> = overrides.unwrap_or_default().into_iter().collect();
    let cfg = parse_config_str(config, &overrides).map_err(value_error)?;
    let m = experiment::run(&cfg).map_err(value_error)?;
    let claims = m.claims.into_iter().map(|c| (c.claim, c.pass)).collect();
    Ok((m.pass, claims, m.artifacts))
}

/// Run one acceptance criterion; returns `(pass, line)`.
#[pyfunction]
#[pyo3(signature = (id, seed = None))]
fn verify_criterion(py: Python<'_>, id: u8, seed: Option<u64>) -> PyResult<(bool, String)> {
    if !(1..=13).contains(&id) {
        return Err(value_error(format!("criterion {id} does not exist")));
    }
    let mut settings = VerifySettings::default();
    if let Some(s) = seed {
        settings.seed = s;
    }
    let outcome = py.detach(|| run_criterion(id, &settings));
    Ok((outcome.pass, outcome.line()))
}

#[pymodule]
fn msle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DysonPaths>()?;
    m.add_class::<DrivingForces>()?;
    m.add_function(wrap_pyfunction!(simulate_dyson, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_bessel, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(forward_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(backward_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip_check, m)?)?;
    m.add_function(wrap_pyfunction!(trace_extract, m)?)?;
    m.add_function(wrap_pyfunction!(constant_ctg, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_sets, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify_criterion, m)?)?;
    Ok(())
}
