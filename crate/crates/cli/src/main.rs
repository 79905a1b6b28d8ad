use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use msle_core::experiment::{self, parse_config_file, parse_config_str, ExperimentConfig, ExperimentKind};

/// Multiple-SLE Monte Carlo experiments.
///
/// Exit status: 0 when every claim holds, 1 on a claim violation, 2 on a
/// usage or configuration error. `MSLE_WORKERS` sets the thread count.
#[derive(Parser)]
#[command(name = "msle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever `kind` the config file names.
    Run(RunArgs),
    /// Simulate Dyson driving forces and check positivity/ordering.
    SimulateDyson(RunArgs),
    /// Integrate the forward Loewner flow over the compact grid.
    Forward(RunArgs),
    /// Extract curve traces from the backward chain.
    Trace(RunArgs),
    /// Perturb the initial values of two driving forces.
    PerturbInit(RunArgs),
    /// Perturb the diffusivity of two driving forces.
    PerturbKappa(RunArgs),
    /// Compare hulls of nearby chains in Hausdorff distance.
    Hausdorff(RunArgs),
    /// Run the acceptance suite.
    Verify(RunArgs),
    /// List the configuration keys.
    Keys,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, applied after the file.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as `--set out=DIR`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads (same as `--set workers=N`).
    #[arg(short, long)]
    workers: Option<usize>,
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::SimulateDyson(_) => ExperimentKind::SimulateDyson,
            Command::Forward(_) => ExperimentKind::Forward,
            Command::Trace(_) => ExperimentKind::Trace,
            Command::PerturbInit(_) => ExperimentKind::PerturbInit,
            Command::PerturbKappa(_) => ExperimentKind::PerturbKappa,
            Command::Hausdorff(_) => ExperimentKind::Hausdorff,
            Command::Verify(_) => ExperimentKind::Verify,
            Command::Run(_) | Command::Keys => return None,
        })
    }

    fn args(&self) -> Option<&RunArgs> {
        match self {
            Command::Run(a)
            | Command::SimulateDyson(a)
            | Command::Forward(a)
            | Command::Trace(a)
            | Command::PerturbInit(a)
            | Command::PerturbKappa(a)
            | Command::Hausdorff(a)
            | Command::Verify(a) => Some(a),
            Command::Keys => None,
        }
    }
}

fn load(kind: Option<ExperimentKind>, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut overrides = Vec::new();
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{s}'"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    let cfg = match (&args.config, kind) {
        (Some(path), _) => parse_config_file(path, &overrides)?,
        (None, Some(k)) => parse_config_str(&format!("kind = {k}\n"), &overrides)?,
        (None, None) => bail!("`run` needs --config"),
    };
    if let Some(k) = kind {
        if cfg.kind != k {
            bail!("config file names kind '{}' but the subcommand is '{k}'", cfg.kind);
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(args) = cli.command.args() else {
        for key in experiment::KEYS {
            println!("{key}");
        }
        return ExitCode::SUCCESS;
    };
    let manifest = load(cli.command.kind(), args).and_then(|cfg| {
        let m = experiment::run(&cfg)?;
        for c in &m.claims {
            println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.claim);
        }
        println!("wrote {} artifacts to {}", m.artifacts.len() + 1, cfg.out.display());
        Ok(m)
    });
    match manifest {
        Ok(m) => ExitCode::from(m.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
