use msle_core::loewner::{DrivingForces, LoewnerConfig};
use msle_core::metrics::{caratheodory_restricted, check_flow_sensitivity, constant_ctg, CompactGridSpec, GridFlow};
use msle_core::paths::{simulate_dyson, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn dyson_forces(seed: u64) -> DrivingForces {
    let grid = TimeGrid::new(1.0, 400).unwrap();
    DrivingForces::from_dyson(&simulate_dyson(grid, seed, 4.0, &[1.0, -1.0]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ctg_decreases_in_delta1(d1 in 0.01f64..2.0, step in 0.0f64..1.0, d2 in 0.5f64..5.0, t in 0.01f64..3.0) {
        let lo = constant_ctg(d1, d2, t, 2).value;
        let hi = constant_ctg(d1 + step, d2, t, 2).value;
        prop_assert!(hi <= lo);
    }

    #[test]
    fn ctg_is_one_at_the_identity(d in 0.01f64..5.0, n in 1usize..5) {
        prop_assert_eq!(constant_ctg(d, d, 0.0, n).value, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_sensitivity_holds_pathwise(seed in any::<u64>(), eps in 1e-4f64..0.1) {
        let f = dyson_forces(seed);
        let points: Vec<Complex64> = CompactGridSpec::new(-2.0, 2.0, 1.0, 2.0, 4, 2).unwrap().points();
        let r = check_flow_sensitivity(&f, &f.shifted(eps), &points, 1.0, &LoewnerConfig::default()).unwrap();
        prop_assert!(r.pass, "{:?}", r.margins);
    }

    #[test]
    fn caratheodory_distance_grows_with_time(seed in any::<u64>(), eps in 1e-3f64..0.1) {
        let f = dyson_forces(seed);
        let grid = CompactGridSpec::new(-1.0, 1.0, 2.5, 3.5, 3, 2).unwrap();
        let cfg = LoewnerConfig::default();
        let a = GridFlow::evaluate(&f, &grid, &cfg).unwrap();
        let b = GridFlow::evaluate(&f.shifted(eps), &grid, &cfg).unwrap();
        let profile = a.distance_profile(&b).unwrap();
        prop_assert_eq!(profile[0], 0.0);
        prop_assert!(profile.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(caratheodory_restricted(&a, &a).unwrap().distance, 0.0);
    }
}
