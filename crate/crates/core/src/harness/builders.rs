use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::dynamics::{KernelSpec, ModelParams, SystemState, TargetDistances};
use crate::error::{Error, Result};
use crate::geometry::GeometryBackend;
use crate::integrate::StepperConfig;
use crate::relkin::{self, SpeedOfLight};

use super::config::{BuiltScenario, ModelConfig, ScenarioKind, ScenarioSpec};

const MAX_ATTEMPTS: usize = 100;
const MIN_SEPARATION: f64 = 0.1;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the closed ball of radius `r` in ℝᵈ.
fn ball(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    if r == 0.0 {
        return vec![0.0; d];
    }
    loop {
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if relkin::norm(&u) <= 1.0 {
            return u.into_iter().map(|c| c * r).collect();
        }
    }
}

fn min_pair_distance(b: &GeometryBackend, pts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min(b.distance(&pts[i], &pts[j]).unwrap_or(0.0));
        }
    }
    best
}

/// Target matrix `R_ij = |p_i − p_j|`.
pub fn build_pattern_targets(points: &[Vec<f64>]) -> Result<TargetDistances> {
    if points.len() < 2 {
        return Err(Error::Degenerate("a pattern needs at least two points".into()));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Param("pattern points must share one positive dimension".into()));
    }
    let n = points.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = relkin::norm(&points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect::<Vec<_>>());
            if r == 0.0 {
                return Err(Error::Degenerate(format!("pattern points {i} and {j} coincide")));
            }
            rows[i][j] = r;
            rows[j][i] = r;
        }
    }
    TargetDistances::new(rows)
}

/// Vertices of the regular star polygon `{n/2}` on a circle of the given
/// radius, in drawing order (for `n = 5`, a pentagram).
pub fn star_points(n: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let a = TAU * (2 * k % n) as f64 / n as f64 + TAU / 4.0;
            vec![radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

/// Pattern points displaced by uniform noise in `[−noise, noise]` per
/// coordinate, with velocities drawn from the ball of radius `speed`.
pub fn pattern_state(points: &[Vec<f64>], noise: f64, speed: f64, c: SpeedOfLight, seed: u64) -> Result<SystemState> {
    if let SpeedOfLight::Finite(cv) = c {
        if speed >= cv {
            return Err(Error::Param(format!("initial speed {speed} is not below c = {cv}")));
        }
    }
    let d = points.first().map_or(0, Vec::len);
    let flat = GeometryBackend::euclidean(d.max(1));
    let mut rng = rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let x: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|c| c + if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 }).collect())
            .collect();
        let v: Vec<Vec<f64>> = (0..points.len()).map(|_| ball(&mut rng, d, speed)).collect();
        if min_pair_distance(&flat, &x) > 0.0 {
            return SystemState::from_velocities(0.0, &x, &v, c);
        }
    }
    Err(Error::Degenerate("could not place pattern particles apart".into()))
}

/// Random flocking initial data: positions uniform in `[0, box]^d` with all
/// pairs farther apart than 0.1, momenta uniform in the ball of radius
/// `speed` with exactly zero sum.
pub fn flocking_state(n: usize, d: usize, box_size: f64, speed: f64, seed: u64) -> Result<SystemState> {
    let flat = GeometryBackend::euclidean(d);
    let mut rng = rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..=box_size)).collect()).collect();
        let mut w: Vec<Vec<f64>> = (0..n).map(|_| ball(&mut rng, d, speed)).collect();
        if min_pair_distance(&flat, &x) <= MIN_SEPARATION {
            continue;
        }
        let mean: Vec<f64> = (0..d).map(|k| w.iter().map(|m| m[k]).sum::<f64>() / n as f64).collect();
        for m in w.iter_mut() {
            for (a, b) in m.iter_mut().zip(&mean) {
                *a -= b;
            }
        }
        // the last momentum absorbs the rounding so that the sum is zero
        let rest: Vec<f64> = (0..d).map(|k| w[..n - 1].iter().fold(0.0, |acc, m| acc + m[k])).collect();
        w[n - 1] = rest.iter().map(|r| -r).collect();
        return SystemState::new(0.0, &x, &w);
    }
    Err(Error::Degenerate(format!("no admissible flocking configuration after {MAX_ATTEMPTS} draws")))
}

/// Flocking scenario spec for `n` particles in `d` dimensions. The
/// initial data are built once to confirm the flocking hypotheses.
pub fn build_flocking_scenario(n: usize, d: usize, seed: u64, model: ModelConfig) -> Result<ScenarioSpec> {
    let spec = ScenarioSpec {
        seed,
        model,
        stepper: StepperConfig::rk4(5e-3, 100.0).with_stride(20),
        scenario: ScenarioKind::Flocking { n, dim: d, box_size: 3.0, speed: 1.0, target: 1.0 },
    };
    let built = spec.build()?;
    let report = diagnostics::admissibility(&built.state, &built.params, None)?;
    if !report.flocking_hypotheses_ok {
        return Err(Error::Condition {
            clause: "flocking hypotheses".into(),
            detail: "couplings, kernel or initial data do not satisfy them".into(),
        });
    }
    Ok(spec)
}

fn base_point(b: &GeometryBackend) -> (Vec<f64>, std::ops::Range<usize>) {
    let d = b.dim();
    match *b {
        GeometryBackend::Euclidean { .. } => (vec![0.0; d], 0..d),
        GeometryBackend::Sphere { radius, .. } => {
            let mut x = vec![0.0; d + 1];
            x[d] = radius;
            (x, 0..d)
        }
        GeometryBackend::Hyperbolic { radius, .. } => {
            let mut x = vec![0.0; d + 1];
            x[0] = radius;
            (x, 1..d + 1)
        }
    }
}

/// `n` points within geodesic distance `spread` of a base point, with
/// tangent momenta drawn from the ball of radius `speed` and projected.
pub fn manifold_state(b: &GeometryBackend, n: usize, spread: f64, speed: f64, seed: u64) -> Result<SystemState> {
    if !(spread >= 0.0 && 2.0 * spread < b.injectivity_radius()) {
        return Err(Error::Param(format!("spread {spread} must be below half the injectivity radius")));
    }
    let (base, slots) = base_point(b);
    let m = b.ambient_dim();
    let mut rng = rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = vec![0.0; m];
            for (slot, c) in slots.clone().zip(ball(&mut rng, b.dim(), spread)) {
                u[slot] = c;
            }
            let p = b.exp(&base, &u);
            w.push(b.project_tangent(&p, &ball(&mut rng, m, speed)));
            x.push(p);
        }
        if n < 2 || min_pair_distance(b, &x) > MIN_SEPARATION.min(spread) {
            return SystemState::new(0.0, &x, &w);
        }
    }
    Err(Error::Degenerate(format!("could not place {n} particles apart within spread {spread}")))
}

/// Quantities entering the finite-time collision construction for two
/// particles on a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionConditions {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    /// Initial total energy.
    pub energy: f64,
    /// Upper distance bound `R + √(8(E0 − 2)/κ₂)`.
    pub r_upper: f64,
    /// Minimum of φ on `[0, r_upper]`.
    pub phi_m: f64,
    /// `Φ(x₂ − x₁) = ∫₀^{x₂−x₁} φ`.
    pub big_phi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    /// Minimiser of the comparison envelope, when it has an interior one.
    pub t_star: Option<f64>,
    /// Minimum of the comparison envelope over `t ≥ 0`.
    pub y_min: f64,
}

impl CollisionConditions {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4
    }

    fn first_failure(&self) -> Option<(&'static str, String)> {
        if !self.c1 {
            return Some(("C1", "need |x_i| < R/2, x1 < 0 < x2 and v2 < 0 < v1".into()));
        }
        if !self.c2 {
            return Some(("C2", "kappa0 (Phi(dx) - phi_m dx) is not below v1 - v2".into()));
        }
        if !self.c3 {
            return Some(("C3", "kappa0 Phi(dx) + kappa1 dx / 2 is not below v1 - v2".into()));
        }
        if !self.c4 {
            return Some(("C4", format!("comparison envelope stays positive (minimum {})", self.y_min)));
        }
        None
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 50)
}

/// Evaluate the four collision conditions for the classical two-particle
/// line system. The last one is made concrete: the linear comparison
/// envelope `y' = −A y + B t + C`, `y(0) = x₂ − x₁`, must become negative.
pub fn verify_collision_conditions(
    r: f64,
    x0: [f64; 2],
    v0: [f64; 2],
    kappas: (f64, f64, f64),
    kernel: KernelSpec,
) -> Result<CollisionConditions> {
    let (k0, k1, k2) = kappas;
    if !(k2 > 0.0) {
        return Err(Error::Param("the collision construction needs kappa2 > 0".into()));
    }
    let built = collision_built(r, x0, v0, kappas, kernel)?;
    let energy = diagnostics::kinetic_energy(&built.state, &built.params, None)?
        + diagnostics::potential_energy(&built.state, &built.params, None)?;
    let dx = x0[1] - x0[0];
    let c1 = x0[0].abs() < r / 2.0 && x0[1].abs() < r / 2.0 && x0[0] < 0.0 && 0.0 < x0[1] && v0[1] < 0.0 && 0.0 < v0[0];
    let r_upper = r + (8.0 * (energy - 2.0).max(0.0) / k2).sqrt();
    let phi_m = kernel.min_on(r_upper);
    let big_phi = adaptive_simpson(&|y| kernel.eval(y.abs()), 0.0, dx, 1e-10);
    let rel = v0[0] - v0[1];
    let c2 = k0 * big_phi - k0 * phi_m * dx < rel;
    let c3 = k0 * big_phi + 0.5 * k1 * dx < rel;

    let a = k0 * phi_m + 0.5 * k1;
    let b = 2.0 * (k2 * energy).sqrt();
    let c = -rel + k0 * big_phi + 0.5 * k1 * dx;
    let (k, t_star, y_min) = if a > 0.0 {
        let k = dx + (b - a * c) / (a * a);
        if k * a * a > b {
            let t = (k * a * a / b).ln() / a;
            (k, Some(t), b * t / a + c / a)
        } else {
            (k, None, dx)
        }
    } else {
        // y = dx + C t + B t²/2
        let t = if b > 0.0 && c < 0.0 { -c / b } else { 0.0 };
        (f64::NAN, Some(t), dx + c * t + 0.5 * b * t * t)
    };
    let c4 = y_min < 0.0;
    Ok(CollisionConditions { c1, c2, c3, c4, energy, r_upper, phi_m, big_phi, a, b, c, k, t_star, y_min })
}

fn collision_built(
    r: f64,
    x0: [f64; 2],
    v0: [f64; 2],
    kappas: (f64, f64, f64),
    kernel: KernelSpec,
) -> Result<BuiltScenario> {
    if !(r > 0.0) {
        return Err(Error::Param(format!("target distance must be positive, got {r}")));
    }
    let params = ModelParams {
        c: SpeedOfLight::Infinite,
        kappa0: kappas.0,
        kappa1: kappas.1,
        kappa2: kappas.2,
        targets: TargetDistances::uniform(2, r)?,
        kernel,
    };
    let state = SystemState::new(0.0, &[vec![x0[0]], vec![x0[1]]], &[vec![v0[0]], vec![v0[1]]])?;
    Ok(BuiltScenario { state, params, backend: None })
}

/// Build and verify the two-particle collision example with explicit data;
/// fails with a [`Error::Condition`] naming the first violated clause.
pub fn build_collision_example_with(
    r: f64,
    x0: [f64; 2],
    v0: [f64; 2],
    kappas: (f64, f64, f64),
    kernel: KernelSpec,
) -> Result<(BuiltScenario, CollisionConditions)> {
    let cond = verify_collision_conditions(r, x0, v0, kappas, kernel)?;
    if let Some((clause, detail)) = cond.first_failure() {
        return Err(Error::Condition { clause: clause.into(), detail });
    }
    let built = collision_built(r, x0, v0, kappas, kernel)?;
    Ok((built, cond))
}

/// Collision example with target distance `r`, particles at `∓r/4`
/// moving towards each other with unit speed.
pub fn build_collision_example(r: f64, kappas: (f64, f64, f64)) -> Result<ScenarioSpec> {
    let kernel = KernelSpec::CuckerSmale { beta: 0.5 };
    let (x0, v0) = ([-r / 4.0, r / 4.0], [1.0, -1.0]);
    build_collision_example_with(r, x0, v0, kappas, kernel)?;
    Ok(ScenarioSpec {
        seed: 0,
        model: ModelConfig {
            c: SpeedOfLight::Infinite,
            kappa0: kappas.0,
            kappa1: kappas.1,
            kappa2: kappas.2,
            kernel,
            targets: None,
        },
        stepper: StepperConfig::rk4(1e-3, 10.0).with_stride(10),
        scenario: ScenarioKind::CollisionExample { r, x0, v0 },
    })
}

/// Named ready-to-run scenarios.
pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    let kernel = KernelSpec::CuckerSmale { beta: 0.5 };
    let model =
        |c: SpeedOfLight, k2: f64| ModelConfig { c, kappa0: 1.0, kappa1: 1.0, kappa2: k2, kernel, targets: None };
    match name {
        "pattern" => Ok(ScenarioSpec {
            seed,
            model: model(SpeedOfLight::Infinite, 5.0),
            stepper: StepperConfig::rk4(1e-2, 50.0).with_stride(10),
            scenario: ScenarioKind::Pattern { points: star_points(5, 1.0), position_noise: 0.3, initial_speed: 0.1 },
        }),
        "collision" => {
            let mut spec = build_collision_example(2.0, (0.01, 0.01, 1e-4))?;
            spec.seed = seed;
            Ok(spec)
        }
        "flocking" => build_flocking_scenario(6, 2, seed, model(SpeedOfLight::Finite(5.0), 1.0)),
        "sphere" => Ok(ScenarioSpec {
            seed,
            model: model(SpeedOfLight::Finite(5.0), 1.0),
            stepper: StepperConfig::rk4(1e-3, 10.0).with_stride(10),
            scenario: ScenarioKind::Manifold {
                backend: GeometryBackend::sphere(2, 1.0),
                n: 5,
                spread: 0.6,
                speed: 0.5,
                target: 0.5,
                positions: None,
                momenta: None,
            },
        }),
        other => {
            Err(Error::Param(format!("unknown scenario {other:?}; expected pattern, collision, flocking or sphere")))
        }
    }
}
