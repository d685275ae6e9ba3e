use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relflock::diagnostics::*;
use relflock::dynamics::{euclidean_rhs, manifold_rhs};
use relflock::{
    simulate, Error, GeometryBackend, KernelSpec, ModelParams, SpeedOfLight, StepperConfig, SystemState,
    TargetDistances,
};

fn case(seed: u64, n: usize, c: SpeedOfLight) -> (SystemState, ModelParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> =
        (0..n).map(|k| vec![k as f64 + rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0)]).collect();
    let w: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let p = ModelParams {
        c,
        kappa0: rng.gen_range(0.1..2.0),
        kappa1: rng.gen_range(0.1..2.0),
        kappa2: rng.gen_range(0.1..2.0),
        targets: TargetDistances::uniform(n, rng.gen_range(0.5..2.0)).unwrap(),
        kernel: KernelSpec::CuckerSmale { beta: 0.5 },
    };
    (SystemState::new(0.0, &x, &w).unwrap(), p)
}

fn total_energy(s: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> f64 {
    kinetic_energy(s, p, b).unwrap() + potential_energy(s, p, b).unwrap()
}

/// `−dE/dt` along the flow by a central difference of the energy.
fn production_oracle(s: &SystemState, p: &ModelParams) -> f64 {
    let d = euclidean_rhs(s, p).unwrap();
    let h = 1e-5;
    let shift = |k: f64| SystemState {
        t: 0.0,
        dim: s.dim,
        x: s.x.iter().zip(&d.dx).map(|(a, b)| a + k * b).collect(),
        w: s.w.iter().zip(&d.dw).map(|(a, b)| a + k * b).collect(),
    };
    -(total_energy(&shift(h), p, None) - total_energy(&shift(-h), p, None)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn production_is_energy_decay(seed in any::<u64>(), n in 2usize..6, c in prop_oneof![Just(f64::INFINITY), 1.5..20.0f64]) {
        let light = if c.is_finite() { SpeedOfLight::Finite(c) } else { SpeedOfLight::Infinite };
        let (s, p) = case(seed, n, light);
        let got = energy_production(&s, &p, None).unwrap();
        let oracle = production_oracle(&s, &p);
        prop_assert!(got >= 0.0);
        prop_assert!((got - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()), "{} vs {}", got, oracle);
    }

    #[test]
    fn potential_is_frobenius_mismatch(seed in any::<u64>(), n in 2usize..7) {
        let (s, p) = case(seed, n, SpeedOfLight::Infinite);
        let mut fro = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = ((s.pos(i)[0] - s.pos(j)[0]).powi(2) + (s.pos(i)[1] - s.pos(j)[1]).powi(2)).sqrt();
                fro += (r - p.targets.get(i, j)).powi(2);
            }
        }
        // the diagonal contributes nothing: r_ii = R_ii = 0
        let expect = p.kappa2 / (8.0 * n as f64) * fro;
        prop_assert!((potential_energy(&s, &p, None).unwrap() - expect).abs() <= 1e-13 * (1.0 + expect));
    }

    #[test]
    fn kinetic_energy_is_at_least_n(seed in any::<u64>(), n in 1usize..7, c in 0.5..20.0f64) {
        let (s, p) = case(seed, n, SpeedOfLight::Finite(c));
        prop_assert!(kinetic_energy(&s, &p, None).unwrap() >= n as f64);
        prop_assert!((momentum_kinetic_energy(&s, SpeedOfLight::Infinite).unwrap()
            - kinetic_energy(&s, &p.with_c(SpeedOfLight::Infinite), None).unwrap()).abs() <= 1e-13);
    }

    #[test]
    fn cumulative_integral_is_exact_for_cubics(seed in any::<u64>(), k in 4usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut times = vec![0.0];
        for _ in 1..k {
            times.push(times.last().unwrap() + rng.gen_range(0.01..0.3));
        }
        let (a, b, c, d): (f64, f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f = |t: f64| a + b * t + c * t * t + d * t * t * t;
        let big_f = |t: f64| a * t + b * t * t / 2.0 + c * t.powi(3) / 3.0 + d * t.powi(4) / 4.0;
        let vals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let integral = cumulative_integral(&times, &vals);
        for (t, i) in times.iter().zip(&integral) {
            prop_assert!((i - big_f(*t)).abs() <= 1e-12 * (1.0 + big_f(*t).abs()));
        }
    }
}

#[test]
fn manifold_production_matches_energy_decay() {
    let b = GeometryBackend::sphere(2, 1.0);
    let s = relflock::harness::manifold_state(&b, 4, 0.6, 0.7, 5).unwrap();
    let p = ModelParams {
        c: SpeedOfLight::Finite(2.0),
        kappa0: 1.0,
        kappa1: 0.5,
        kappa2: 2.0,
        targets: TargetDistances::uniform(4, 0.5).unwrap(),
        kernel: KernelSpec::CuckerSmale { beta: 0.5 },
    };
    let d = manifold_rhs(&b, &s, &p).unwrap();
    // move along exp for positions and transport the momentum update along
    let h = 1e-5;
    let shifted = |k: f64| {
        let mut x = Vec::new();
        let mut w = Vec::new();
        for i in 0..s.n() {
            let r = i * 3..(i + 1) * 3;
            let xi = s.pos(i);
            let step: Vec<f64> = d.dx[r.clone()].iter().map(|a| k * a).collect();
            let y = b.exp(xi, &step);
            let wi: Vec<f64> = s.mom(i).iter().zip(&d.dw[r]).map(|(a, c)| a + k * c).collect();
            w.push(b.transport(xi, &y, &wi).unwrap());
            x.push(y);
        }
        SystemState::new(0.0, &x, &w).unwrap()
    };
    let oracle = -(total_energy(&shifted(h), &p, Some(&b)) - total_energy(&shifted(-h), &p, Some(&b))) / (2.0 * h);
    let got = energy_production(&s, &p, Some(&b)).unwrap();
    assert!((got - oracle).abs() < 1e-7 * (1.0 + oracle.abs()), "{got} vs {oracle}");
}

#[test]
fn free_flow_has_zero_residual() {
    let (s, p) = case(4, 5, SpeedOfLight::Finite(3.0));
    let free = ModelParams { kappa0: 0.0, kappa1: 0.0, kappa2: 0.0, ..p };
    let traj = simulate(&s, &free, &StepperConfig::rk4(1e-2, 5.0), None);
    assert!(traj.energy.iter().all(|e| e.production == 0.0));
    assert!(energy_identity_residual(&traj) <= 1e-12);
}

#[test]
fn energy_is_dissipated() {
    let (s, p) = case(9, 5, SpeedOfLight::Finite(3.0));
    let traj = simulate(&s, &p, &StepperConfig::rk4(1e-2, 10.0), None);
    let e0 = traj.energy[0].total;
    assert!(traj.energy.windows(2).all(|w| w[1].total <= w[0].total + 1e-10 * e0));
    assert!(energy_identity_residual(&traj) <= 1e-6);
}

#[test]
fn bounds_and_checks_frozen_values() {
    let p = ModelParams {
        c: SpeedOfLight::Infinite,
        kappa0: 1.0,
        kappa1: 1.0,
        kappa2: 8.0,
        targets: TargetDistances::uniform(2, 1.0).unwrap(),
        kernel: KernelSpec::CuckerSmale { beta: 0.5 },
    };
    // δ = √(4·2·(2.5 − 2)/8) = √0.5
    let (lo, hi) = distance_bounds(&p, 2.5).unwrap();
    assert!((lo - (1.0 - 0.5f64.sqrt())).abs() < 1e-15 && (hi - (1.0 + 0.5f64.sqrt())).abs() < 1e-15);
    // threshold N + κ₂/(4N) R² = 3
    assert!(check_collision_avoidance(&p, 2.99).unwrap());
    assert!(!check_collision_avoidance(&p, 3.0).unwrap());
    let loose = ModelParams { kappa2: 0.0, ..p.clone() };
    assert!(matches!(check_collision_avoidance(&loose, 2.5), Err(Error::Param(_))));
    assert!(matches!(distance_bounds(&loose, 2.5), Err(Error::Param(_))));

    let sphere = GeometryBackend::sphere(2, 1.0);
    assert!(check_manifold_wellposedness(&sphere, &p, 2.1).unwrap());
    let far = ModelParams { targets: TargetDistances::uniform(2, 3.5).unwrap(), ..p };
    assert!(!check_manifold_wellposedness(&sphere, &far, 2.0).unwrap());
}

#[test]
fn flocking_metrics_frozen_values() {
    let s = SystemState::new(
        0.0,
        &[vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 1.0]],
        &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 0.0]],
    )
    .unwrap();
    let f = flocking_metrics(&s, SpeedOfLight::Infinite, None).unwrap();
    assert_eq!(f.max_rel_speed, 2.0);
    assert_eq!(f.min_pair_dist, 1.0);
    assert_eq!(f.max_pair_dist, 5.0);
    assert_eq!(f.momentum_sum_norm, Some(0.0));
    assert_eq!(max_relative_momentum(&s, None).unwrap(), 2.0);
    assert_eq!(max_speed(&s, SpeedOfLight::Infinite, None).unwrap(), 1.0);
    let single = SystemState::new(0.0, &[vec![0.0]], &[vec![1.0]]).unwrap();
    assert_eq!(flocking_metrics(&single, SpeedOfLight::Infinite, None).unwrap().min_pair_dist, 0.0);
}

#[test]
fn admissibility_requires_zero_momentum_in_flat_space() {
    let s = relflock::harness::flocking_state(4, 2, 3.0, 0.5, 2).unwrap();
    let p = ModelParams {
        c: SpeedOfLight::Finite(5.0),
        kappa0: 1.0,
        kappa1: 1.0,
        kappa2: 1.0,
        targets: TargetDistances::uniform(4, 1.0).unwrap(),
        kernel: KernelSpec::CuckerSmale { beta: 0.5 },
    };
    let report = admissibility(&s, &p, None).unwrap();
    assert!(report.flocking_hypotheses_ok);
    assert_eq!(report.manifold_wellposed_ok, None);
    let mut moving = s.clone();
    moving.w[0] += 0.1;
    assert!(!admissibility(&moving, &p, None).unwrap().flocking_hypotheses_ok);
}

#[test]
fn deviation_of_identical_runs_is_zero() {
    let (s, p) = case(1, 3, SpeedOfLight::Finite(10.0));
    let cfg = StepperConfig::rk4(1e-2, 1.0);
    let a = simulate(&s, &p, &cfg, None);
    let dev = deviation(&a, &a).unwrap();
    assert_eq!(dev.sup_d, 0.0);
    assert_eq!(dev.times, a.times);
    let short = simulate(&s, &p, &StepperConfig::rk4(1e-2, 0.5), None);
    assert!(matches!(deviation(&a, &short), Err(Error::GridMismatch(_))));
    let b = simulate(&s, &p.with_c(SpeedOfLight::Infinite), &cfg, None);
    let dev = deviation(&a, &b).unwrap();
    assert_eq!(dev.d[0], 0.0);
    assert!(dev.sup_d > 0.0);
    let json = serde_json::to_value(&dev).unwrap();
    assert!(json.get("D").is_some());
}

#[test]
fn uniform_energy_condition() {
    let s = SystemState::new(0.0, &[vec![0.0, 0.0], vec![1.5, 0.0]], &[vec![0.1, 0.0], vec![-0.1, 0.0]]).unwrap();
    let p = ModelParams {
        c: SpeedOfLight::Infinite,
        kappa0: 1.0,
        kappa1: 1.0,
        kappa2: 4.0,
        targets: TargetDistances::uniform(2, 1.5).unwrap(),
        kernel: KernelSpec::CuckerSmale { beta: 0.5 },
    };
    assert!(check_uniform_energy_condition(&s, &p, SpeedOfLight::Finite(10.0)).unwrap());
    // |w| above c has no relativistic member
    assert!(!check_uniform_energy_condition(&s, &p, SpeedOfLight::Finite(0.05)).unwrap());
}
