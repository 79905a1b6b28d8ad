use msle_core::loewner::LoewnerConfig;
use msle_core::metrics::CompactGridSpec;
use msle_core::paths::{particle_noises, LongRunSpec, TimeGrid};
use msle_core::perturbation::{
    coupled_init_pair, coupled_kappa_pair, identity_residual, run_kappa_perturbation,
    KappaPerturbConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_perturbations_reproduce_the_original(seed in any::<u64>(), kappa in 0.5f64..=4.0) {
        let noises = particle_noises(TimeGrid::new(1.0, 300).unwrap(), seed, 2);
        let p = coupled_init_pair([1.0, -1.0], [1.0, -1.0], kappa, &noises).unwrap();
        prop_assert_eq!(&p.original, &p.perturbed);
        let k = coupled_kappa_pair([1.0, -1.0], kappa, kappa, &noises).unwrap();
        prop_assert_eq!(&k.original, &k.perturbed);
    }

    #[test]
    fn separation_drift_is_monotone(seed in any::<u64>(), db1 in -0.04f64..0.04, db2 in -0.04f64..0.04) {
        let (a, b) = ([1.0, -1.0], [1.0 + db1, -1.0 + db2]);
        let noises = particle_noises(TimeGrid::new(1.0, 1000).unwrap(), seed, 2);
        let p = coupled_init_pair(a, b, 4.0, &noises).unwrap();
        for k in 0..2 {
            let drift: Vec<f64> = p.original.particle(k).iter().zip(p.perturbed.particle(k))
                .map(|(l, e)| (l - e - (a[k] - b[k])).abs())
                .collect();
            prop_assert!(drift.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn gap_comparison_holds_pathwise(seed in 0u64..1_000_000, kstar in 2.05f64..=4.0) {
        let cfg = KappaPerturbConfig {
            init: [1.0, -1.0],
            kappa: 2.0,
            kappa_star: kstar,
            grid: TimeGrid::new(1.0, 1000).unwrap(),
            seed,
            n_paths: 4,
            compact: CompactGridSpec::new(-1.0, 1.0, 2.0, 3.0, 2, 2).unwrap(),
            loewner: LoewnerConfig::default(),
            long_run: LongRunSpec { t_long: 1.0, dt_long: 1e-3, t_far: 1.0, far_ratio: 1e-3 },
            ctg_override: None,
            with_chains: false,
        };
        let r = run_kappa_perturbation(&cfg).unwrap();
        prop_assert!(r.gap_comparison.pass);
    }
}

#[test]
fn identity_residual_is_order_dt() {
    // Regression slope of log residual against log dt over dt = 1e-2, 5e-3, 2.5e-3.
    let (a, b) = ([1.0, -1.0], [1.04, -1.04]);
    let fine = TimeGrid::new(1.0, 400).unwrap();
    let mut logs = [0.0f64; 3];
    let seeds = 20;
    for s in 0..seeds {
        let noises = particle_noises(fine, 900 + s, 2);
        for (i, factor) in [4usize, 2, 1].into_iter().enumerate() {
            let coarse: Vec<_> = noises.iter().map(|n| n.coarsen(factor).unwrap()).collect();
            let pair = coupled_init_pair(a, b, 4.0, &coarse).unwrap();
            logs[i] += identity_residual(&pair, 4.0).ln() / seeds as f64;
        }
    }
    let x = [1e-2f64.ln(), 5e-3f64.ln(), 2.5e-3f64.ln()];
    let xm = x.iter().sum::<f64>() / 3.0;
    let ym = logs.iter().sum::<f64>() / 3.0;
    let slope = x.iter().zip(&logs).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / x.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    assert!((0.8..=1.6).contains(&slope), "slope {slope}");
}

#[test]
fn event_e1_frequency_matches_infimum_law() {
    let cfg = KappaPerturbConfig {
        init: [1.0, -1.0],
        kappa: 2.0,
        kappa_star: 2.01,
        grid: TimeGrid::new(1.0, 1000).unwrap(),
        seed: 40_000_000,
        n_paths: 10_000,
        compact: CompactGridSpec::new(-1.0, 1.0, 2.0, 3.0, 2, 2).unwrap(),
        loewner: LoewnerConfig::default(),
        long_run: LongRunSpec::default_for(2.0, 1e-3),
        ctg_override: None,
        with_chains: false,
    };
    let t = run_kappa_perturbation(&cfg).unwrap().tail;
    assert!(t.e1_z.abs() <= 3.0, "{} vs {} (z = {})", t.freq_e1, t.p_e1, t.e1_z);
}
