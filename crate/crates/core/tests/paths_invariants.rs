use msle_core::paths::{
    bessel_dimension, particle_noises, sample_noise, simulate_bessel, simulate_coupled_bessel_dims,
    simulate_coupled_bessel_starts, simulate_dyson, NoisePath, TimeGrid,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bessel_paths_stay_positive(seed in any::<u64>(), d in 3.0f64..9.0, a in 1e-3f64..3.0, n in 10usize..2000) {
        let grid = TimeGrid::new(1.0, n).unwrap();
        let path = simulate_bessel(&sample_noise(grid, seed), a, d).unwrap();
        prop_assert!(path.values().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn dyson_paths_stay_ordered(seed in any::<u64>(), kappa in 0.5f64..=4.0, n in 2usize..=4) {
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let init: Vec<f64> = (0..n).map(|k| 1.0 - k as f64).collect();
        let paths = simulate_dyson(grid, seed, kappa, &init).unwrap();
        for i in 0..=grid.n_steps() {
            let s = paths.snapshot(i);
            prop_assert!(s.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn zero_perturbation_couplings_are_exact(seed in any::<u64>(), kappa in 0.5f64..=4.0, a in 0.1f64..3.0) {
        let grid = TimeGrid::new(1.0, 300).unwrap();
        let noise = sample_noise(grid, seed);
        let (x, y) = simulate_coupled_bessel_starts(&noise, a, a, bessel_dimension(kappa)).unwrap();
        prop_assert_eq!(x, y);
        let (x, y) = simulate_coupled_bessel_dims(&noise, a, kappa, kappa).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn same_seed_same_dyson_path() {
    let grid = TimeGrid::new(1.0, 400).unwrap();
    let a = simulate_dyson(grid, 11, 2.0, &[1.0, 0.0, -1.0]).unwrap();
    let b = simulate_dyson(grid, 11, 2.0, &[1.0, 0.0, -1.0]).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, simulate_dyson(grid, 12, 2.0, &[1.0, 0.0, -1.0]).unwrap());
}

#[test]
fn second_moment_grows_linearly() {
    let grid = TimeGrid::new(1.0, 1000).unwrap();
    let n = 10_000;
    let paths: Vec<_> = (0..n)
        .map(|s| simulate_bessel(&sample_noise(grid, 5_000_000 + s), 1.0, 3.0).unwrap())
        .collect();
    for k in [250, 500, 1000] {
        let t = grid.time(k);
        let sq: Vec<f64> = paths.iter().map(|p| p.values()[k].powi(2)).collect();
        let mean = sq.iter().sum::<f64>() / n as f64;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - (1.0 + 3.0 * t)).abs() <= 3.0 * se, "t = {t}: {mean} vs {}", 1.0 + 3.0 * t);
    }
}

/// Mean `|X_T(dt) − X_T(dt/64)|` over paths, with the coarse noise summed
/// from the reference noise.
fn strong_error(reference: &[NoisePath], factor: usize, a: f64, d: f64) -> f64 {
    let total: f64 = reference
        .iter()
        .map(|n| {
            let fine = simulate_bessel(n, a, d).unwrap().terminal();
            let coarse = simulate_bessel(&n.coarsen(factor).unwrap(), a, d).unwrap().terminal();
            (fine - coarse).abs()
        })
        .sum();
    total / reference.len() as f64
}

#[test]
fn strong_error_halves_with_dt() {
    let (a, d) = (0.5, 3.0);
    let coarse_steps = 50;
    let grid = TimeGrid::new(1.0, coarse_steps * 64).unwrap();
    let reference: Vec<NoisePath> = (0..400).map(|s| sample_noise(grid, 7_000 + s)).collect();
    let e1 = strong_error(&reference, 64, a, d);
    let e2 = strong_error(&reference, 32, a, d);
    let ratio = e2 / e1;
    assert!((0.3..=0.8).contains(&ratio), "e(dt) = {e1}, e(dt/2) = {e2}, ratio {ratio}");
}

#[test]
fn particle_noises_are_independent_streams() {
    let grid = TimeGrid::new(1.0, 1000).unwrap();
    let n = particle_noises(grid, 3, 2);
    let dot: f64 = n[0].increments().iter().zip(n[1].increments()).map(|(x, y)| x * y).sum();
    // Correlation of 1000 independent products: sd about dt·√1000.
    assert!(dot.abs() < 4.0 * grid.dt() * 1000f64.sqrt());
}
