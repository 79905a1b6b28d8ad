use msle_core::loewner::{backward_evolve, capacity_coefficient, forward_evolve, DrivingForces, LoewnerConfig};
use msle_core::paths::{simulate_dyson, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn dyson_forces(seed: u64, kappa: f64) -> DrivingForces {
    let grid = TimeGrid::new(1.0, 500).unwrap();
    DrivingForces::from_dyson(&simulate_dyson(grid, seed, kappa, &[1.0, -1.0]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_imaginary_part_decreases(seed in any::<u64>(), kappa in 1.0f64..=4.0, x in -3.0f64..3.0, y in 0.2f64..3.0) {
        let forces = dyson_forces(seed, kappa);
        let tr = forward_evolve(Complex64::new(x, y), &forces, &LoewnerConfig::default()).unwrap();
        prop_assert!(tr.samples.windows(2).all(|w| w[1].im < w[0].im));
    }

    #[test]
    fn backward_imaginary_part_grows(seed in any::<u64>(), x in -3.0f64..3.0, y in 0.01f64..3.0, t in 0.0f64..=1.0) {
        let forces = dyson_forces(seed, 4.0);
        let z = Complex64::new(x, y);
        let h = backward_evolve(z, &forces, t, &LoewnerConfig::default()).unwrap();
        prop_assert!(h.im >= z.im);
    }

    #[test]
    fn deeper_points_survive_longer(seed in any::<u64>(), x in -2.0f64..2.0) {
        let forces = dyson_forces(seed, 4.0);
        let cfg = LoewnerConfig::default();
        let times: Vec<f64> = [0.1, 0.3, 0.6, 1.0, 1.5, 2.5]
            .iter()
            .map(|&y| forward_evolve(Complex64::new(x, y), &forces, &cfg).unwrap().swallowed_at.unwrap_or(f64::INFINITY))
            .collect();
        prop_assert!(times.windows(2).all(|w| w[1] >= w[0]), "{:?}", times);
    }
}

#[test]
fn backward_flow_with_constant_forces_rises_monotonically() {
    // Constant forces make the chain time-homogeneous, so the horizons nest.
    let forces = DrivingForces::constant(TimeGrid::new(1.0, 400).unwrap(), &[0.5, -0.5]).unwrap();
    let cfg = LoewnerConfig::default();
    let z = Complex64::new(0.3, 0.05);
    let ims: Vec<f64> = (0..=20)
        .map(|k| backward_evolve(z, &forces, k as f64 / 20.0, &cfg).unwrap().im)
        .collect();
    assert!(ims.windows(2).all(|w| w[1] >= w[0]), "{ims:?}");
}

#[test]
fn capacity_error_shrinks_with_radius() {
    let cfg = LoewnerConfig::default();
    for seed in 0..5 {
        let forces = dyson_forces(seed, 2.0);
        let errors: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&r| (capacity_coefficient(Complex64::new(0.0, r), &forces, &cfg).unwrap() - 2.0).norm())
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {errors:?}");
    }
}
