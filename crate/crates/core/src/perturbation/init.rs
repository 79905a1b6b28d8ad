use serde::Serialize;

use super::{cumulative_trapezoid, PerturbationError};
use crate::loewner::{DrivingForces, LoewnerConfig};
use crate::metrics::{
    caratheodory_restricted, constant_ctg, refinement_check, CompactGridSpec, GridFlow,
    RefinementCheck,
};
use crate::parallel::map_paths;
use crate::paths::{
    bessel_dimension, dyson_pair_from_bessel, particle_noises, simulate_coupled_bessel_starts,
    BesselPath, DysonPaths, NoisePath, TimeGrid,
};
use crate::report::{numerical_slack, params, BoundReport};

/// Two Dyson pairs started at `a` and `b`, sharing their Brownian motions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitPerturbConfig {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub eps: f64,
    pub kappa: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
    pub compact: CompactGridSpec,
    pub loewner: LoewnerConfig,
    /// Evaluate the Loewner chains and the Carathéodory bound.
    pub with_chains: bool,
}

impl InitPerturbConfig {
    pub fn validate(&self) -> Result<(), PerturbationError> {
        let bad = |m: String| Err(PerturbationError::ConfigInvalid(m));
        let [a1, a2] = self.a;
        let [b1, b2] = self.b;
        if !(self.kappa > 0.0 && self.kappa <= 4.0) {
            return bad(format!("kappa must lie in (0,4], got {}", self.kappa));
        }
        if !(a1 > a2) {
            return bad(format!("a1 > a2 required, got a = ({a1}, {a2})"));
        }
        if !(b1 > b2) {
            return bad(format!("b1 > b2 required, got b = ({b1}, {b2})"));
        }
        if !(self.eps > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.eps));
        }
        if !(self.eps < (a1 - a2) / 3.0) {
            return bad(format!(
                "epsilon must satisfy epsilon < (a1 - a2)/3 = {}, got {}",
                (a1 - a2) / 3.0,
                self.eps
            ));
        }
        for k in 0..2 {
            if !((self.a[k] - self.b[k]).abs() < self.eps) {
                return bad(format!(
                    "|a{0} - b{0}| < epsilon required, got |{1} - {2}| >= {3}",
                    k + 1,
                    self.a[k],
                    self.b[k],
                    self.eps
                ));
            }
        }
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        Ok(())
    }
}

/// Original and perturbed systems of one coupled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct InitPair {
    pub original: DysonPaths,
    pub perturbed: DysonPaths,
    pub gap: BesselPath,
    pub perturbed_gap: BesselPath,
}

/// Build both systems from the particle noises `dB_1, dB_2`: the gaps share
/// `W = (B_1 − B_2)/√2` and the sums share `W' = (B_1 + B_2)/√2`.
pub fn coupled_init_pair(
    a: [f64; 2],
    b: [f64; 2],
    kappa: f64,
    noises: &[NoisePath],
) -> Result<InitPair, PerturbationError> {
    if noises.len() != 2 {
        return Err(PerturbationError::ConfigInvalid(format!(
            "two particle noises required, got {}",
            noises.len()
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let gap_noise = noises[0].combine(&noises[1], s, -s)?;
    let sum_noise = noises[0].combine(&noises[1], s, s)?;
    let d = bessel_dimension(kappa);
    let (x, y) = simulate_coupled_bessel_starts(&gap_noise, a[0] - a[1], b[0] - b[1], d)?;
    Ok(InitPair {
        original: dyson_pair_from_bessel(&x, &sum_noise, a[0], a[1])?,
        perturbed: dyson_pair_from_bessel(&y, &sum_noise, b[0], b[1])?,
        gap: x,
        perturbed_gap: y,
    })
}

/// `max_{t,k} |λ_k − η_k − (a_k − b_k) − ½(−1)^{3−k}(a − b)(e^{−(4/κ)∫₀ᵗ ds/(X_sY_s)} − 1)|`
/// with the integral by the trapezoid rule.
pub fn identity_residual(pair: &InitPair, kappa: f64) -> f64 {
    let a = pair.original.init();
    let b = pair.perturbed.init();
    let gap_change = (a[0] - a[1]) - (b[0] - b[1]);
    let dt = pair.gap.grid().dt();
    let inv: Vec<f64> = pair
        .gap
        .values()
        .iter()
        .zip(pair.perturbed_gap.values())
        .map(|(x, y)| 1.0 / (x * y))
        .collect();
    let integral = cumulative_trapezoid(&inv, dt);
    let mut worst = 0.0f64;
    for (i, int) in integral.iter().enumerate() {
        let decay = (-4.0 / kappa * int).exp() - 1.0;
        for k in 0..2 {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let lhs = pair.original.particle(k)[i] - pair.perturbed.particle(k)[i];
            let rhs = a[k] - b[k] + 0.5 * sign * gap_change * decay;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitPathRecord {
    pub path: usize,
    pub seed: u64,
    /// `max_{t,k} |λ_k − η_k|`.
    pub max_separation: f64,
    pub identity_residual: f64,
    pub distance: Option<f64>,
    pub delta1: Option<f64>,
    pub ctg: Option<f64>,
    pub excluded_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitPerturbationReport {
    /// `|λ_k − η_k| < 2ε`.
    pub separation: BoundReport,
    /// `sup |g_λ − g_η| ≤ 4C(T,G)ε` over the grid points kept by both chains.
    pub caratheodory: Option<BoundReport>,
    pub identity: IdentityReport,
    pub excluded_points: usize,
    pub refinement: Option<RefinementCheck>,
    pub records: Vec<InitPathRecord>,
    pub pass: bool,
}

fn simulate_record(
    cfg: &InitPerturbConfig,
    path: usize,
) -> Result<InitPathRecord, PerturbationError> {
    let seed = cfg.seed.wrapping_add(path as u64);
    let noises = particle_noises(cfg.grid, seed, 2);
    let pair = coupled_init_pair(cfg.a, cfg.b, cfg.kappa, &noises)?;
    let max_separation = (0..2)
        .flat_map(|k| {
            pair.original
                .particle(k)
                .iter()
                .zip(pair.perturbed.particle(k))
                .map(|(l, e)| (l - e).abs())
        })
        .fold(0.0, f64::max);
    let mut record = InitPathRecord {
        path,
        seed,
        max_separation,
        identity_residual: identity_residual(&pair, cfg.kappa),
        distance: None,
        delta1: None,
        ctg: None,
        excluded_points: 0,
    };
    if cfg.with_chains {
        let f1 = DrivingForces::from_dyson(&pair.original);
        let f2 = DrivingForces::from_dyson(&pair.perturbed);
        let g1 = GridFlow::evaluate(&f1, &cfg.compact, &cfg.loewner)?;
        let g2 = GridFlow::evaluate(&f2, &cfg.compact, &cfg.loewner)?;
        let r = caratheodory_restricted(&g1, &g2)?;
        let c = constant_ctg(r.delta1, cfg.compact.delta2(), cfg.grid.horizon(), 2);
        record.distance = Some(r.distance);
        record.delta1 = Some(r.delta1);
        record.ctg = Some(c.value);
        record.excluded_points = r.excluded;
    }
    Ok(record)
}

/// Simulate `n_paths` coupled pairs (path `p` uses seed `seed + p`).
pub fn run_init_perturbation(
    cfg: &InitPerturbConfig,
) -> Result<InitPerturbationReport, PerturbationError> {
    cfg.validate()?;
    let records = map_paths(cfg.n_paths, |p| simulate_record(cfg, p))?;
    let dt = cfg.grid.dt();
    let eps = cfg.eps;
    let sep_margins: Vec<f64> = records.iter().map(|r| 2.0 * eps - r.max_separation).collect();
    let pars = params([
        ("a1", cfg.a[0]),
        ("a2", cfg.a[1]),
        ("b1", cfg.b[0]),
        ("b2", cfg.b[1]),
        ("eps", eps),
        ("kappa", cfg.kappa),
        ("T", cfg.grid.horizon()),
        ("dt", dt),
    ]);
    let separation = BoundReport::from_margins(
        "initial-value separation",
        pars.clone(),
        records.len(),
        &sep_margins,
        numerical_slack(dt, 2.0 * eps),
    );
    let (caratheodory, refinement) = if cfg.with_chains {
        let margins: Vec<f64> = records
            .iter()
            .map(|r| 4.0 * r.ctg.unwrap_or(f64::NAN) * eps - r.distance.unwrap_or(f64::NAN))
            .collect();
        let scale = records.iter().filter_map(|r| r.ctg).fold(0.0, f64::max) * 4.0 * eps;
        let mut pars = pars.clone();
        pars.insert("y_min".into(), cfg.compact.y_min);
        pars.insert("y_max".into(), cfg.compact.y_max);
        pars.insert("x_min".into(), cfg.compact.x_min);
        pars.insert("x_max".into(), cfg.compact.x_max);
        let report = BoundReport::from_margins(
            "initial-value Caratheodory bound",
            pars,
            records.len(),
            &margins,
            numerical_slack(dt, scale),
        );
        let noises = particle_noises(cfg.grid, cfg.seed, 2);
        let pair = coupled_init_pair(cfg.a, cfg.b, cfg.kappa, &noises)?;
        let check = refinement_check(
            &DrivingForces::from_dyson(&pair.original),
            &DrivingForces::from_dyson(&pair.perturbed),
            &cfg.compact,
            &cfg.loewner,
        )?;
        (Some(report), Some(check))
    } else {
        (None, None)
    };
    let n = records.len();
    let identity = IdentityReport {
        max_residual: records.iter().map(|r| r.identity_residual).fold(0.0, f64::max),
        mean_residual: records.iter().map(|r| r.identity_residual).sum::<f64>() / n as f64,
        n_paths: n,
    };
    let excluded_points = records.iter().map(|r| r.excluded_points).sum();
    let pass = separation.pass && caratheodory.as_ref().is_none_or(|r| r.pass);
    Ok(InitPerturbationReport {
        separation,
        caratheodory,
        identity,
        excluded_points,
        refinement,
        records,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_dyson_with_noise, sample_noise_stream};

    fn config() -> InitPerturbConfig {
        InitPerturbConfig {
            a: [1.0, -1.0],
            b: [1.04, -1.04],
            eps: 0.05,
            kappa: 4.0,
            grid: TimeGrid::new(1.0, 1000).unwrap(),
            seed: 7,
            n_paths: 4,
            compact: CompactGridSpec::new(-1.0, 1.0, 1.0, 2.0, 3, 3).unwrap(),
            loewner: LoewnerConfig::default(),
            with_chains: false,
        }
    }

    #[test]
    fn validation_messages() {
        let mut c = config();
        c.kappa = 5.0;
        assert!(c.validate().unwrap_err().to_string().contains("kappa must lie in (0,4]"));
        let mut c = config();
        c.eps = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("(a1 - a2)/3"));
        let mut c = config();
        c.b = [1.1, -1.0];
        assert!(c.validate().is_err());
        assert!(config().validate().is_ok());
    }

    #[test]
    fn pair_matches_direct_dyson_simulation() {
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let noises: Vec<_> = (0..2).map(|j| sample_noise_stream(grid, 3, j)).collect();
        let pair = coupled_init_pair([1.0, -1.0], [1.04, -1.04], 4.0, &noises).unwrap();
        let direct = simulate_dyson_with_noise(&noises, 4.0, &[1.0, -1.0]).unwrap();
        for k in 0..2 {
            for (x, y) in pair.original.particle(k).iter().zip(direct.particle(k)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let mut c = config();
        c.b = c.a;
        let grid = c.grid;
        let noises = particle_noises(grid, 1, 2);
        let pair = coupled_init_pair(c.a, c.b, c.kappa, &noises).unwrap();
        assert_eq!(pair.original, pair.perturbed);
        assert_eq!(identity_residual(&pair, c.kappa), 0.0);
        let report = run_init_perturbation(&c).unwrap();
        assert!(report.pass);
        assert!(report.separation.margins.unwrap().min == 2.0 * c.eps);
    }

    #[test]
    fn residual_is_first_order() {
        let c = config();
        let fine = c.grid.refine(2).unwrap();
        let noises_fine = particle_noises(fine, 11, 2);
        let noises: Vec<_> = noises_fine.iter().map(|n| n.coarsen(2).unwrap()).collect();
        let coarse = identity_residual(&coupled_init_pair(c.a, c.b, c.kappa, &noises).unwrap(), 4.0);
        let finer = identity_residual(&coupled_init_pair(c.a, c.b, c.kappa, &noises_fine).unwrap(), 4.0);
        assert!(coarse < 1e-2 * c.eps, "{coarse}");
        let ratio = coarse / finer;
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }
}
