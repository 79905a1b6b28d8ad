use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentError;
use crate::metrics::CompactGridSpec;
use crate::paths::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateDyson,
    Forward,
    Trace,
    PerturbInit,
    PerturbKappa,
    Hausdorff,
    Verify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::SimulateDyson,
        Self::Forward,
        Self::Trace,
        Self::PerturbInit,
        Self::PerturbKappa,
        Self::Hausdorff,
        Self::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateDyson => "simulate-dyson",
            Self::Forward => "forward",
            Self::Trace => "trace",
            Self::PerturbInit => "perturb-init",
            Self::PerturbKappa => "perturb-kappa",
            Self::Hausdorff => "hausdorff",
            Self::Verify => "verify",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment kind '{s}'")))
    }
}

/// How the driving forces of `forward` and `trace` runs are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceKind {
    /// Dyson Brownian motion started at `a`.
    Dyson,
    /// `λ_j ≡ a_j`.
    Constant,
}

/// Every parameter of a run, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub kappa: f64,
    pub kappa_star: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub a: Vec<f64>,
    pub b: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub grid: CompactGridSpec,
    pub delta_trace: Option<f64>,
    pub t_long: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub forces: ForceKind,
    pub trace_samples: usize,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

pub const KEYS: [&str; 17] = [
    "kind",
    "kappa",
    "kappa_star",
    "T",
    "dt",
    "a",
    "b",
    "eps",
    "grid",
    "delta_trace",
    "T_long",
    "n_paths",
    "seed",
    "forces",
    "trace_samples",
    "out",
    "workers",
];

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            kappa: 4.0,
            kappa_star: None,
            horizon: 1.0,
            dt: 1e-3,
            a: vec![1.0, -1.0],
            b: None,
            eps: None,
            grid: CompactGridSpec::new(-1.0, 1.0, 1.0, 2.0, 5, 3).expect("default grid"),
            delta_trace: None,
            t_long: None,
            n_paths: 100,
            seed: 0,
            forces: ForceKind::Dyson,
            trace_samples: 200,
            out: PathBuf::from("out"),
            workers: None,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid, ExperimentError> {
        TimeGrid::with_step(self.horizon, self.dt)
            .map_err(|e| ExperimentError::Config(format!("T = {}, dt = {}: {e}", self.horizon, self.dt)))
    }

    pub fn gap(&self) -> f64 {
        self.a[0] - self.a[self.a.len() - 1]
    }

    /// `ε`, with the kind-specific default.
    pub fn eps_or_default(&self) -> Option<f64> {
        match (self.eps, self.kind) {
            (Some(e), _) => Some(e),
            (None, ExperimentKind::Hausdorff) => Some(1e-3),
            _ => None,
        }
    }

    /// `b`, defaulting to `(a1 + 0.8ε, a2 − 0.8ε)`.
    pub fn b_or_default(&self) -> Option<Vec<f64>> {
        match (&self.b, self.eps_or_default()) {
            (Some(b), _) => Some(b.clone()),
            (None, Some(e)) if self.a.len() == 2 => Some(vec![self.a[0] + 0.8 * e, self.a[1] - 0.8 * e]),
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let v = value.trim();
        match key {
            "kind" => self.kind = v.parse()?,
            "kappa" => self.kappa = number(key, v)?,
            "kappa_star" => self.kappa_star = Some(number(key, v)?),
            "T" => self.horizon = number(key, v)?,
            "dt" => self.dt = number(key, v)?,
            "a" => self.a = list(key, v)?,
            "b" => self.b = Some(list(key, v)?),
            "eps" => self.eps = Some(number(key, v)?),
            "grid" => {
                let g = list(key, v)?;
                if g.len() != 6 {
                    return Err(ExperimentError::Config(format!(
                        "grid expects x_min,x_max,y_min,y_max,nx,ny, got '{v}'"
                    )));
                }
                let count = |x: f64| -> Result<usize, ExperimentError> {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(ExperimentError::Config(format!("grid counts must be positive integers, got {x}")))
                    }
                };
                self.grid = CompactGridSpec::new(g[0], g[1], g[2], g[3], count(g[4])?, count(g[5])?)
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
            "delta_trace" => self.delta_trace = Some(number(key, v)?),
            "T_long" => self.t_long = Some(number(key, v)?),
            "n_paths" => self.n_paths = integer(key, v)?,
            "seed" => self.seed = integer(key, v)?,
            "forces" => {
                self.forces = match v {
                    "dyson" => ForceKind::Dyson,
                    "constant" => ForceKind::Constant,
                    _ => return Err(ExperimentError::Config(format!("forces must be dyson or constant, got '{v}'"))),
                }
            }
            "trace_samples" => self.trace_samples = integer(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = Some(integer(key, v)?),
            _ => {
                return Err(ExperimentError::Config(format!(
                    "unknown key '{key}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Cross-field checks for the selected kind.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.kappa > 0.0 && self.kappa <= 4.0) {
            return bad(format!("kappa must lie in (0,4], got {}", self.kappa));
        }
        self.time_grid()?;
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.a.is_empty() {
            return bad("a must list at least one position".into());
        }
        let decreasing = self.a.windows(2).all(|w| w[0] > w[1]);
        let dyson_forces = !matches!(
            (self.kind, self.forces),
            (ExperimentKind::Forward | ExperimentKind::Trace, ForceKind::Constant)
        );
        if dyson_forces && !decreasing {
            return bad(format!("a must be strictly decreasing, got {:?}", self.a));
        }
        if let Some(d) = self.delta_trace {
            if !(d > 0.0) {
                return bad(format!("delta_trace must be positive, got {d}"));
            }
        }
        if let Some(t) = self.t_long {
            if !(t > 0.0) {
                return bad(format!("T_long must be positive, got {t}"));
            }
        }
        if self.trace_samples == 0 {
            return bad("trace_samples must be positive".into());
        }
        let two = || {
            if self.a.len() == 2 {
                Ok(())
            } else {
                Err(ExperimentError::Config(format!(
                    "{} needs N = 2 (a = a1,a2), got {} positions",
                    self.kind,
                    self.a.len()
                )))
            }
        };
        match self.kind {
            ExperimentKind::PerturbInit => {
                two()?;
                let Some(eps) = self.eps else {
                    return bad("perturb-init needs eps".into());
                };
                let (a1, a2) = (self.a[0], self.a[1]);
                if !(eps > 0.0 && eps < (a1 - a2) / 3.0) {
                    return bad(format!(
                        "epsilon must satisfy 0 < epsilon < (a1 - a2)/3 = {}, got {eps}",
                        (a1 - a2) / 3.0
                    ));
                }
                let b = self.b_or_default().expect("eps is set");
                if b.len() != 2 || !(b[0] > b[1]) {
                    return bad(format!("b must be two decreasing positions, got {b:?}"));
                }
                for k in 0..2 {
                    if !((self.a[k] - b[k]).abs() < eps) {
                        return bad(format!("|a{0} - b{0}| < epsilon required", k + 1));
                    }
                }
            }
            ExperimentKind::PerturbKappa => {
                two()?;
                let Some(ks) = self.kappa_star else {
                    return bad("perturb-kappa needs kappa_star".into());
                };
                if !(ks > 0.0 && ks <= 4.0) {
                    return bad(format!("kappa must lie in (0,4], got kappa_star = {ks}"));
                }
                if !(self.kappa < ks) {
                    return bad(format!("kappa < kappa_star required, got {} and {ks}", self.kappa));
                }
            }
            ExperimentKind::Hausdorff => {
                let eps = self.eps_or_default().expect("hausdorff default");
                if !(eps > 0.0) {
                    return bad(format!("eps must be positive, got {eps}"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Every effective setting as `key → value`, in the file syntax.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let g = &self.grid;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("kind", self.kind.to_string());
        put("kappa", self.kappa.to_string());
        if let Some(k) = self.kappa_star {
            put("kappa_star", k.to_string());
        }
        put("T", self.horizon.to_string());
        put("dt", self.dt.to_string());
        put("a", join(&self.a));
        if let Some(b) = self.b_or_default() {
            put("b", join(&b));
        }
        if let Some(e) = self.eps_or_default() {
            put("eps", e.to_string());
        }
        put(
            "grid",
            format!("{},{},{},{},{},{}", g.x_min, g.x_max, g.y_min, g.y_max, g.nx, g.ny),
        );
        if let Some(d) = self.delta_trace {
            put("delta_trace", d.to_string());
        }
        if let Some(t) = self.t_long {
            put("T_long", t.to_string());
        }
        put("n_paths", self.n_paths.to_string());
        put("seed", self.seed.to_string());
        put(
            "forces",
            match self.forces {
                ForceKind::Dyson => "dyson",
                ForceKind::Constant => "constant",
            }
            .into(),
        );
        put("trace_samples", self.trace_samples.to_string());
        put("out", self.out.display().to_string());
        m
    }
}

fn number(key: &str, v: &str) -> Result<f64, ExperimentError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ExperimentError::Config(format!("{key}: expected a number, got '{v}'")))
}

fn integer<T: FromStr>(key: &str, v: &str) -> Result<T, ExperimentError> {
    v.parse::<T>()
        .map_err(|_| ExperimentError::Config(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ExperimentError> {
    v.split(',').map(|s| number(key, s.trim())).collect()
}

/// Parse `key = value` lines (`#` starts a comment), apply `overrides` in
/// order, and validate.
pub fn parse_config_str(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, ExperimentError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!("line {}: expected key = value, got '{line}'", i + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    pairs.extend(overrides.iter().cloned());
    let kind = pairs
        .iter()
        .rev()
        .find(|(k, _)| k == "kind")
        .ok_or_else(|| ExperimentError::Config("missing key 'kind'".into()))?
        .1
        .parse()?;
    let mut cfg = ExperimentConfig::new(kind);
    for (k, v) in &pairs {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_file(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_perturb_init_gets_defaults() {
        let cfg = parse_config_str("kind = perturb-init\nkappa = 4\na = 1,-1\neps = 0.05\n", &[]).unwrap();
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.n_paths, 100);
        assert_eq!(cfg.b_or_default().unwrap(), vec![1.04, -1.04]);
        let echo = cfg.echo();
        assert_eq!(echo["dt"], "0.001");
        assert_eq!(echo["n_paths"], "100");
    }

    #[test]
    fn precondition_messages() {
        let e = parse_config_str("kind = perturb-init\nkappa = 5\neps = 0.05", &[]).unwrap_err();
        assert!(e.to_string().contains("kappa must lie in (0,4]"), "{e}");
        let e = parse_config_str("kind = perturb-init\na = 1,-1\neps = 1", &[]).unwrap_err();
        assert!(e.to_string().contains("epsilon < (a1 - a2)/3"), "{e}");
        let e = parse_config_str("kind = forward\nfoo = 1", &[]).unwrap_err();
        assert!(e.to_string().contains("unknown key 'foo'"));
        assert!(parse_config_str("kappa = 2", &[]).is_err());
        assert!(parse_config_str("kind = perturb-kappa\nkappa = 2\nkappa_star = 1", &[]).is_err());
    }

    #[test]
    fn overrides_win_and_comments_are_ignored() {
        let over = vec![("n_paths".to_string(), "7".to_string())];
        let cfg = parse_config_str("# run\nkind = simulate-dyson # inline\nn_paths = 3\n\n", &over).unwrap();
        assert_eq!(cfg.n_paths, 7);
        let over = vec![("kind".to_string(), "trace".to_string())];
        assert_eq!(parse_config_str("kind = forward", &over).unwrap().kind, ExperimentKind::Trace);
    }

    #[test]
    fn constant_forces_may_coincide() {
        assert!(parse_config_str("kind = forward\nforces = constant\na = 0,0", &[]).is_ok());
        assert!(parse_config_str("kind = simulate-dyson\na = 0,0", &[]).is_err());
    }
}
