//! Configuration-driven runs: parse a flat `key = value` file, dispatch to a
//! driver, and write CSV/JSON artifacts plus `manifest.json`.
//!
//! Everything written except the manifest's wall time is a pure function of
//! the configuration, whatever the worker count.

mod config;
mod drivers;

pub use config::{parse_config_file, parse_config_str, ExperimentConfig, ExperimentKind, ForceKind, KEYS};
pub use drivers::{
    hausdorff_pair, run_hausdorff, DriverError, HausdorffExperiment, HausdorffPathRecord, HausdorffSummary,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::parallel::with_workers;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{kind} run failed: {message}")]
    Run { kind: ExperimentKind, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit status: configuration problems are usage errors.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// One output file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
        bytes.push(b'\n');
        Self {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimOutcome {
    pub claim: String,
    pub pass: bool,
}

/// Artifacts and claim outcomes of a run, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub artifacts: Vec<Artifact>,
    pub claims: Vec<ClaimOutcome>,
}

impl Execution {
    pub fn pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub claims: Vec<ClaimOutcome>,
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl RunManifest {
    /// 0 when every claim holds, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Run the experiment in memory on `cfg.workers` threads (else
/// `MSLE_WORKERS`, else the rayon default).
pub fn execute(cfg: &ExperimentConfig) -> Result<Execution, ExperimentError> {
    cfg.validate()?;
    with_workers(cfg.workers, || drivers::dispatch(cfg))
}

/// [`execute`], then write every artifact and finally `manifest.json` into
/// `cfg.out`. Each file is written to a temporary name and renamed.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    let start = Instant::now();
    let execution = execute(cfg)?;
    let out = cfg.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    for artifact in &execution.artifacts {
        write_atomic(out, &artifact.name, &artifact.bytes)?;
    }
    let manifest = RunManifest {
        config: cfg.echo(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        pass: execution.pass(),
        claims: execution.claims,
        artifacts: execution.artifacts.iter().map(|a| a.name.clone()).collect(),
    };
    let json = Artifact::json("manifest.json", &manifest);
    write_atomic(out, &json.name, &json.bytes)?;
    Ok(manifest)
}

fn io_error(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, &target).map_err(|e| io_error(&target, e))
}

/// Rows of numbers under a header; `f64` values use their shortest
/// round-trip form.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub(crate) fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub(crate) fn row(&mut self, cells: &[Cell]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(x) => write!(self.text, "{x}"),
                Cell::U(x) => write!(self.text, "{x}"),
                Cell::B(x) => write!(self.text, "{}", u8::from(*x)),
                Cell::Empty => Ok(()),
            }
            .expect("write to string");
        }
        self.text.push('\n');
    }

    pub(crate) fn finish(self) -> String {
        self.text
    }
}

pub(crate) enum Cell {
    F(f64),
    U(u64),
    B(bool),
    Empty,
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}
