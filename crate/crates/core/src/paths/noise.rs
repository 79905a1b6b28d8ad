use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{PathError, TimeGrid};

/// Stream ids inside one path seed. Particle `j` reads stream `j`.
pub mod streams {
    /// First stream used for noise on the extension beyond the main horizon.
    pub const EXTENSION: u64 = 1 << 20;
    /// Uniforms for Brownian-bridge minima.
    pub const BRIDGE: u64 = 1 << 21;
    /// Noise and uniforms of the adaptive far-tail continuation.
    pub const FAR_TAIL: u64 = 1 << 22;
}

/// A deterministic generator for `(seed, stream)`.
///
/// ChaCha is counter based, so distinct streams of one seed never overlap and
/// any path can be regenerated without touching the others.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian increments `ΔW_i ~ N(0, dt)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: TimeGrid,
    seed: u64,
    stream: u64,
    increments: Vec<f64>,
}

/// `n_steps` independent `N(0, dt)` increments, reproducible from `seed`.
pub fn sample_noise(grid: TimeGrid, seed: u64) -> NoisePath {
    sample_noise_stream(grid, seed, 0)
}

pub fn sample_noise_stream(grid: TimeGrid, seed: u64, stream: u64) -> NoisePath {
    let mut rng = stream_rng(seed, stream);
    let sd = grid.dt().sqrt();
    let increments = (0..grid.n_steps())
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    NoisePath {
        grid,
        seed,
        stream,
        increments,
    }
}

/// Independent Brownian increments for `n` particles (streams `0..n`).
pub fn particle_noises(grid: TimeGrid, seed: u64, n: usize) -> Vec<NoisePath> {
    (0..n as u64)
        .map(|j| sample_noise_stream(grid, seed, j))
        .collect()
}

impl NoisePath {
    pub fn from_increments(grid: TimeGrid, increments: Vec<f64>) -> Result<Self, PathError> {
        if increments.len() != grid.n_steps() {
            return Err(PathError::LengthMismatch {
                expected: grid.n_steps(),
                found: increments.len(),
            });
        }
        Ok(Self {
            grid,
            seed: 0,
            stream: 0,
            increments,
        })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            seed: 0,
            stream: 0,
            increments: vec![0.0; grid.n_steps()],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `ca·self + cb·other`, increment by increment.
    pub fn combine(&self, other: &NoisePath, ca: f64, cb: f64) -> Result<NoisePath, PathError> {
        if !self.grid.same_as(&other.grid) {
            return Err(PathError::GridMismatch);
        }
        let increments = self
            .increments
            .iter()
            .zip(&other.increments)
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        Ok(NoisePath {
            grid: self.grid,
            seed: self.seed,
            stream: self.stream,
            increments,
        })
    }

    /// `W_{t_i}` with `W_0 = 0`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut w = 0.0;
        out.push(w);
        for dw in &self.increments {
            w += dw;
            out.push(w);
        }
        out
    }

    /// The same Brownian path seen on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath, PathError> {
        let grid = self.grid.coarsen(factor)?;
        let increments = self
            .increments
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(NoisePath {
            grid,
            seed: self.seed,
            stream: self.stream,
            increments,
        })
    }

    pub fn truncate(&self, n_steps: usize) -> Result<NoisePath, PathError> {
        let grid = self.grid.truncate(n_steps)?;
        Ok(NoisePath {
            grid,
            seed: self.seed,
            stream: self.stream,
            increments: self.increments[..n_steps].to_vec(),
        })
    }
}
