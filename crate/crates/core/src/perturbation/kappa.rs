use serde::Serialize;

use super::laws::{event_probability, phi, sup_abs_tail_envelope, zeta, zeta_two_term, PhiCoefficients};
use super::{frequency_se, PerturbationError};
use crate::loewner::{DrivingForces, LoewnerConfig};
use crate::metrics::{caratheodory_restricted, constant_ctg, CompactGridSpec, GridFlow};
use crate::parallel::map_paths;
use crate::paths::{
    bessel_index, bessel_dimension, dyson_pair_from_bessel, long_run_infimum, particle_noises,
    simulate_coupled_bessel_dims, BesselPath, DysonPaths, LongRunSpec, NoisePath, RunningExtrema,
    TimeGrid,
};
use crate::report::{numerical_slack, params, BoundReport};

/// Dyson pairs with diffusivities `κ < κ*` from the same start and noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaPerturbConfig {
    pub init: [f64; 2],
    pub kappa: f64,
    pub kappa_star: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
    pub compact: CompactGridSpec,
    pub loewner: LoewnerConfig,
    pub long_run: LongRunSpec,
    /// Use this `C(T,G)` instead of the per-path empirical constant.
    pub ctg_override: Option<f64>,
    pub with_chains: bool,
}

impl KappaPerturbConfig {
    pub fn gap(&self) -> f64 {
        self.init[0] - self.init[1]
    }

    pub fn validate(&self) -> Result<(), PerturbationError> {
        let bad = |m: String| Err(PerturbationError::ConfigInvalid(m));
        for k in [self.kappa, self.kappa_star] {
            if !(k > 0.0 && k <= 4.0) {
                return bad(format!("kappa must lie in (0,4], got {k}"));
            }
        }
        if !(self.kappa < self.kappa_star) {
            return Err(PerturbationError::ParamOrder {
                kappa: self.kappa,
                kappa_star: self.kappa_star,
            });
        }
        if !(self.gap() > 0.0) {
            return bad(format!("a1 > a2 required, got a = ({}, {})", self.init[0], self.init[1]));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if let Some(c) = self.ctg_override {
            if !(c > 0.0) {
                return bad(format!("C(T,G) override must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaPair {
    pub original: DysonPaths,
    pub perturbed: DysonPaths,
    pub gap: BesselPath,
    pub perturbed_gap: BesselPath,
    pub gap_noise: NoisePath,
}

pub fn coupled_kappa_pair(
    init: [f64; 2],
    kappa: f64,
    kappa_star: f64,
    noises: &[NoisePath],
) -> Result<KappaPair, PerturbationError> {
    if noises.len() != 2 {
        return Err(PerturbationError::ConfigInvalid(format!(
            "two particle noises required, got {}",
            noises.len()
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let gap_noise = noises[0].combine(&noises[1], s, -s)?;
    let sum_noise = noises[0].combine(&noises[1], s, s)?;
    let (x, xs) = simulate_coupled_bessel_dims(&gap_noise, init[0] - init[1], kappa, kappa_star)?;
    Ok(KappaPair {
        original: dyson_pair_from_bessel(&x, &sum_noise, init[0], init[1])?,
        perturbed: dyson_pair_from_bessel(&xs, &sum_noise, init[0], init[1])?,
        gap: x,
        perturbed_gap: xs,
        gap_noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaPathRecord {
    pub path: usize,
    pub seed: u64,
    /// `min_t [(4t/κ²)(κ* − κ) − sup_{s≤t}(X*_s − X_s)²]`.
    pub gap_margin: f64,
    /// `min_t [bound(t) − max_k |λ_k(t) − λ*_k(t)|]` with running infima and `sup|W|`.
    pub force_margin: f64,
    pub distance: Option<f64>,
    pub delta1: Option<f64>,
    pub ctg: Option<f64>,
    pub phi: Option<f64>,
    pub deviates: Option<bool>,
    pub excluded_points: usize,
    /// Estimates of `M_∞` and `M*_∞`.
    pub m_inf: f64,
    pub m_inf_star: f64,
    pub sup_abs_noise: f64,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
}

/// Event and deviation frequencies against their theoretical values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub kappa_gap: f64,
    /// `φ(κ* − κ)` when a fixed `C(T,G)` is used; per-path values are in the records.
    pub phi_threshold: Option<f64>,
    pub deviation_frequency: Option<f64>,
    pub deviation_se: Option<f64>,
    pub zeta: f64,
    pub zeta_two_term: f64,
    /// `ζ < 1`; otherwise the tail claim is vacuous.
    pub zeta_informative: bool,
    pub tail_pass: bool,
    pub freq_e1: f64,
    pub freq_e2: f64,
    pub freq_e3: f64,
    pub p_e1: f64,
    pub p_e2: f64,
    /// `1 − 2√(2/π)(√T/u)e^{−u²/2T}` at `u = (κ* − κ)^{−3/4}`.
    pub p_e3_lower: f64,
    /// `(freq_e1 − p_e1)/SE`.
    pub e1_z: f64,
    pub e2_z: f64,
    /// Paths in `E₁ ∩ E₂ ∩ E₃` whose deviation still exceeds `φ`.
    pub deviations_on_events: usize,
    /// `M_∞` is estimated by the bridge-corrected infimum up to `t_far`.
    pub t_long: f64,
    pub t_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaPerturbationReport {
    pub gap_comparison: BoundReport,
    pub force_bound: BoundReport,
    pub tail: TailReport,
    pub excluded_points: usize,
    pub records: Vec<KappaPathRecord>,
    pub pass: bool,
}

fn running_max(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    values
        .map(|v| {
            m = m.max(v);
            m
        })
        .collect()
}

fn simulate_record(
    cfg: &KappaPerturbConfig,
    path: usize,
) -> Result<KappaPathRecord, PerturbationError> {
    let seed = cfg.seed.wrapping_add(path as u64);
    let (kappa, kstar) = (cfg.kappa, cfg.kappa_star);
    let x = kstar - kappa;
    let a = cfg.gap();
    let grid = cfg.grid;
    let noises = particle_noises(grid, seed, 2);
    let pair = coupled_kappa_pair(cfg.init, kappa, kstar, &noises)?;

    let sq = running_max(
        pair.gap
            .values()
            .iter()
            .zip(pair.perturbed_gap.values())
            .map(|(u, v)| (v - u) * (v - u)),
    );
    let gap_margin = (0..=grid.n_steps())
        .map(|i| 4.0 * grid.time(i) / (kappa * kappa) * x - sq[i])
        .fold(f64::INFINITY, f64::min);

    let ext = RunningExtrema::new(&pair.gap, &pair.gap_noise);
    let ext_star = RunningExtrema::new(&pair.perturbed_gap, &pair.gap_noise);
    let mut force_margin = f64::INFINITY;
    for i in 1..=grid.n_steps() {
        let t = grid.time(i);
        let mm = ext.infimum[i] * ext_star.infimum[i];
        let bound = x * 2.0 * a / (kstar * kappa) * t / mm
            + x.sqrt() * 16.0 / (kstar * kappa * kappa) * t.powf(2.5) / (mm * mm)
            + x * 2.0 / (kstar * kappa) * t / mm * ext.sup_abs_noise[i];
        let observed = (0..2)
            .map(|k| (pair.original.particle(k)[i] - pair.perturbed.particle(k)[i]).abs())
            .fold(0.0, f64::max);
        force_margin = force_margin.min(bound - observed);
    }

    let m_inf = long_run_infimum(&pair.gap, &cfg.long_run, seed)?.far;
    let m_inf_star = long_run_infimum(&pair.perturbed_gap, &cfg.long_run, seed)?.far;
    let sup_abs_noise = *ext.sup_abs_noise.last().unwrap();
    let level = x.powf(1.0 / 16.0);
    let mut record = KappaPathRecord {
        path,
        seed,
        gap_margin,
        force_margin,
        distance: None,
        delta1: None,
        ctg: None,
        phi: None,
        deviates: None,
        excluded_points: 0,
        m_inf,
        m_inf_star,
        sup_abs_noise,
        e1: m_inf >= level,
        e2: m_inf_star >= level,
        e3: sup_abs_noise <= x.powf(-0.75),
    };
    if cfg.with_chains {
        let g1 = GridFlow::evaluate(&DrivingForces::from_dyson(&pair.original), &cfg.compact, &cfg.loewner)?;
        let g2 = GridFlow::evaluate(&DrivingForces::from_dyson(&pair.perturbed), &cfg.compact, &cfg.loewner)?;
        let r = caratheodory_restricted(&g1, &g2)?;
        let c = cfg
            .ctg_override
            .unwrap_or_else(|| constant_ctg(r.delta1, cfg.compact.delta2(), grid.horizon(), 2).value);
        let threshold = phi(x, &PhiCoefficients::new(c, grid.horizon(), kappa, a));
        record.distance = Some(r.distance);
        record.delta1 = Some(r.delta1);
        record.ctg = Some(c);
        record.phi = Some(threshold);
        record.deviates = Some(r.distance > threshold);
        record.excluded_points = r.excluded;
    }
    Ok(record)
}

pub fn run_kappa_perturbation(
    cfg: &KappaPerturbConfig,
) -> Result<KappaPerturbationReport, PerturbationError> {
    cfg.validate()?;
    let records = map_paths(cfg.n_paths, |p| simulate_record(cfg, p))?;
    let n = records.len();
    let (kappa, kstar) = (cfg.kappa, cfg.kappa_star);
    let x = kstar - kappa;
    let a = cfg.gap();
    let horizon = cfg.grid.horizon();
    let dt = cfg.grid.dt();
    let pars = params([
        ("kappa", kappa),
        ("kappa_star", kstar),
        ("a", a),
        ("T", horizon),
        ("dt", dt),
    ]);
    let gap_margins: Vec<f64> = records.iter().map(|r| r.gap_margin).collect();
    let gap_comparison = BoundReport::from_margins(
        "gap comparison across diffusivities",
        pars.clone(),
        n,
        &gap_margins,
        numerical_slack(dt, 4.0 * horizon * x / (kappa * kappa)),
    );
    let force_margins: Vec<f64> = records.iter().map(|r| r.force_margin).collect();
    let force_bound = BoundReport::from_margins(
        "driving-force bound with running infima",
        pars,
        n,
        &force_margins,
        numerical_slack(dt, 1.0),
    );

    let freq = |f: &dyn Fn(&KappaPathRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / n as f64;
    let nu = bessel_index(bessel_dimension(kappa));
    let nu_star = bessel_index(bessel_dimension(kstar));
    let z = zeta(x, nu, a, horizon);
    let (p_e1, p_e2) = (event_probability(x, nu, a), event_probability(x, nu_star, a));
    let (freq_e1, freq_e2) = (freq(&|r| r.e1), freq(&|r| r.e2));
    let zscore = |f: f64, p: f64| {
        let se = frequency_se(p, n);
        if se > 0.0 { (f - p) / se } else if f == p { 0.0 } else { f64::INFINITY }
    };
    let (deviation_frequency, deviation_se) = if cfg.with_chains {
        let f = freq(&|r| r.deviates == Some(true));
        (Some(f), Some(frequency_se(f, n)))
    } else {
        (None, None)
    };
    let zeta_informative = z < 1.0;
    let tail_pass = match (deviation_frequency, deviation_se) {
        (Some(f), Some(se)) if zeta_informative => f <= z + 2.0 * se,
        _ => true,
    };
    let tail = TailReport {
        kappa_gap: x,
        phi_threshold: cfg
            .ctg_override
            .map(|c| phi(x, &PhiCoefficients::new(c, horizon, kappa, a))),
        deviation_frequency,
        deviation_se,
        zeta: z,
        zeta_two_term: zeta_two_term(x, nu, nu_star, a, horizon),
        zeta_informative,
        tail_pass,
        freq_e1,
        freq_e2,
        freq_e3: freq(&|r| r.e3),
        p_e1,
        p_e2,
        p_e3_lower: 1.0 - sup_abs_tail_envelope(x.powf(-0.75), horizon),
        e1_z: zscore(freq_e1, p_e1),
        e2_z: zscore(freq_e2, p_e2),
        deviations_on_events: records
            .iter()
            .filter(|r| r.e1 && r.e2 && r.e3 && r.deviates == Some(true))
            .count(),
        t_long: cfg.long_run.t_long,
        t_far: cfg.long_run.t_far,
    };
    let pass = gap_comparison.pass && force_bound.pass && tail.tail_pass && tail.deviations_on_events == 0;
    Ok(KappaPerturbationReport {
        gap_comparison,
        force_bound,
        excluded_points: records.iter().map(|r| r.excluded_points).sum(),
        tail,
        records,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> KappaPerturbConfig {
        KappaPerturbConfig {
            init: [1.0, -1.0],
            kappa: 2.0,
            kappa_star: 2.5,
            grid: TimeGrid::new(1.0, 500).unwrap(),
            seed: 1,
            n_paths: 8,
            compact: CompactGridSpec::new(-1.0, 1.0, 2.0, 3.0, 3, 2).unwrap(),
            loewner: LoewnerConfig::default(),
            long_run: LongRunSpec {
                t_long: 10.0,
                dt_long: 0.01,
                t_far: 100.0,
                far_ratio: 1e-2,
            },
            ctg_override: None,
            with_chains: true,
        }
    }

    #[test]
    fn order_is_enforced() {
        let mut c = config();
        c.kappa_star = 1.5;
        assert!(matches!(c.validate(), Err(PerturbationError::ParamOrder { .. })));
        c.kappa_star = 2.0;
        assert!(matches!(c.validate(), Err(PerturbationError::ParamOrder { .. })));
    }

    #[test]
    fn small_run_is_consistent() {
        let report = run_kappa_perturbation(&config()).unwrap();
        assert_eq!(report.records.len(), 8);
        assert_eq!(report.gap_comparison.violations, 0);
        assert_eq!(report.force_bound.violations, 0);
        for r in &report.records {
            assert!(r.m_inf > 0.0 && r.m_inf <= 2.0);
            assert!(r.m_inf_star > 0.0 && r.m_inf_star <= 2.0);
            assert!(r.distance.unwrap() >= 0.0);
        }
    }

    #[test]
    fn tiny_perturbation_barely_moves() {
        let mut c = config();
        c.kappa_star = c.kappa + 1e-9;
        c.n_paths = 2;
        let report = run_kappa_perturbation(&c).unwrap();
        assert!(report.records.iter().all(|r| r.distance.unwrap() < 1e-6));
        assert_eq!(report.tail.deviation_frequency, Some(0.0));
        assert!(report.pass);
    }
}
