use enskog_core::kernels::{AngularMeasure, BetaProfile, CrossSection, KernelSpec, SigmaForm, SpatialRate};
use enskog_core::particles::{
    conserved_quantities, init_ensemble, run, run_coupled, step_coupled, InitSpec, RateCap,
    SimConfig, Simulation,
};
use proptest::prelude::*;

fn kernel(beta: SpatialRate) -> KernelSpec {
    KernelSpec::new(
        3,
        CrossSection::new(0.0, SigmaForm::Power, 3).unwrap(),
        AngularMeasure::long_range(0.5, 0.1).unwrap(),
        beta,
        1e-3,
    )
    .unwrap()
}

fn config(n: usize, seed: u64, cap: RateCap, v_mean: f64) -> SimConfig {
    SimConfig {
        n,
        dt: 0.01,
        t_end: 1.0,
        seed,
        kernel: kernel(SpatialRate::bump(1.0).unwrap()),
        init: InitSpec::Gaussian {
            r_mean: vec![0.0; 3],
            r_std: 0.5,
            v_mean: vec![v_mean, 0.0, 0.0],
            v_std: 1.0,
        },
        rate_cap: cap,
        threads: 1,
    }
}

#[test]
fn coupled_runs_with_equal_data_coincide() {
    let times = [0.0, 0.5, 1.0];
    let mut a = Simulation::new(config(300, 5, RateCap::Auto, 0.0)).unwrap();
    let mut b = Simulation::new(config(300, 5, RateCap::Auto, 0.0)).unwrap();
    let pairs = run_coupled(&mut a, &mut b, &times).unwrap();
    assert!(a.total_collisions() > 0);
    for (x, y) in &pairs {
        assert_eq!(x, y);
    }
}

#[test]
fn coupling_leaves_the_first_run_untouched() {
    let cap = RateCap::Fixed(40.0);
    let alone = run(&config(200, 9, cap, 0.0), &[1.0]).unwrap();
    let mut a = Simulation::new(config(200, 9, cap, 0.0)).unwrap();
    let mut b = Simulation::new(config(200, 9, cap, 0.3)).unwrap();
    let pairs = run_coupled(&mut a, &mut b, &[1.0]).unwrap();
    assert_eq!(pairs[0].0, alone[0]);
    assert_ne!(pairs[0].1, alone[0]);
}

#[test]
fn coupling_rejects_mismatched_runs() {
    let mut a = Simulation::new(config(50, 1, RateCap::Auto, 0.0)).unwrap();
    let mut b = Simulation::new(config(50, 2, RateCap::Auto, 0.0)).unwrap();
    assert!(step_coupled(&mut a, &mut b).is_err());
    let mut c = Simulation::new(config(50, 1, RateCap::Fixed(3.0), 0.0)).unwrap();
    assert!(step_coupled(&mut a, &mut c).is_err());
}

#[test]
fn candidate_counts_follow_the_uniformized_rate() {
    // Constant beta and gamma = 0 give every pair the same rate, so with the
    // cap equal to it each candidate collides.
    let kern = kernel(SpatialRate::new(1.0, BetaProfile::Constant).unwrap());
    let pair = kern.pair_rate(0.0, 1.0).0 * kern.total_angular_rate();
    let (n, dt, steps) = (100usize, 1e-3, 2000u64);
    let mut cfg = config(n, 3, RateCap::Fixed(pair), 0.0);
    cfg.kernel = kern;
    cfg.dt = dt;
    cfg.t_end = dt * steps as f64;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut candidates = 0usize;
    for _ in 0..steps {
        let log = sim.step().unwrap();
        assert_eq!(log.accepted.len(), log.candidates);
        candidates += log.candidates;
    }
    let expected = steps as f64 * dt * (n - 1) as f64 * pair / 2.0;
    assert!((candidates as f64 - expected).abs() <= 5.0 * expected.sqrt());
}

#[test]
fn collisions_are_spread_evenly_over_particles() {
    let n = 20;
    let mut cfg = config(n, 4, RateCap::Fixed(60.0), 0.0);
    cfg.kernel = kernel(SpatialRate::new(1.0, BetaProfile::Constant).unwrap());
    cfg.t_end = 20.0;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut counts = vec![0f64; n];
    for _ in 0..sim.config().steps() {
        for (i, j) in sim.step().unwrap().accepted {
            counts[i] += 1.0;
            counts[j] += 1.0;
        }
    }
    let mean = counts.iter().sum::<f64>() / n as f64;
    assert!(mean > 100.0);
    let chi2: f64 = counts.iter().map(|c| (c - mean).powi(2) / mean).sum();
    let dof = (n - 1) as f64;
    assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}");
}

#[test]
fn gaussian_initial_moments() {
    let n = 40_000;
    let mut cfg = config(n, 8, RateCap::Auto, 0.5);
    cfg.n = n;
    let q = conserved_quantities(&init_ensemble(&cfg).unwrap());
    let se = 1.0 / (n as f64).sqrt();
    assert!((q.momentum[0] - 0.5).abs() < 5.0 * se);
    assert!(q.momentum[1].abs() < 5.0 * se && q.momentum[2].abs() < 5.0 * se);
    // E|v|^2 = |m|^2 + 3 with variance 4|m|^2 + 6 for unit Gaussians.
    let energy_se = ((4.0 * 0.25 + 6.0) / n as f64).sqrt();
    assert!((q.energy - 3.25).abs() < 5.0 * energy_se);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_momentum_and_energy(seed in 0u64..1000, n in 2usize..40, v in -1.0f64..1.0) {
        let mut cfg = config(n, seed, RateCap::EnergyBound, v);
        cfg.t_end = 0.3;
        let mut sim = Simulation::new(cfg).unwrap();
        let q0 = conserved_quantities(sim.ensemble());
        for _ in 0..30 {
            sim.step().unwrap();
        }
        let q = conserved_quantities(sim.ensemble());
        prop_assert_eq!(q.momentum, q0.momentum);
        prop_assert!((q.energy - q0.energy).abs() <= 1e-12 * q0.energy);
    }

    #[test]
    fn coupled_steps_conserve_each_run(seed in 0u64..1000, eps in 0.0f64..0.5) {
        let mut a = Simulation::new(config(30, seed, RateCap::Auto, 0.0)).unwrap();
        let mut b = Simulation::new(config(30, seed, RateCap::Auto, eps)).unwrap();
        let (qa, qb) = (conserved_quantities(a.ensemble()), conserved_quantities(b.ensemble()));
        for _ in 0..30 {
            step_coupled(&mut a, &mut b).unwrap();
        }
        prop_assert_eq!(conserved_quantities(a.ensemble()).momentum, qa.momentum);
        prop_assert_eq!(conserved_quantities(b.ensemble()).momentum, qb.momentum);
        prop_assert!((conserved_quantities(b.ensemble()).energy - qb.energy).abs() <= 1e-12 * qb.energy);
    }
}
