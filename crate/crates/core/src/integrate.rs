//! Fixed-step time integration with collision localisation.
//!
//! Manifold states are advanced in ambient coordinates. The ambient
//! derivative of the momentum is the covariant one plus the normal part
//! supplied by [`GeometryBackend::normal_acceleration`]; stage states are
//! projected back onto the manifold and tangent spaces before each
//! evaluation, and the final state is retracted.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, EnergyReport, FlockingReport};
use crate::dynamics::{self, Derivative, ModelParams, SystemState, COLLISION_EPSILON};
use crate::error::{Error, Result};
use crate::geometry::GeometryBackend;

/// Bisection steps used to localise a collision inside one step.
pub const LOCALISATION_ITERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_collision_epsilon")]
    pub collision_epsilon: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_collision_epsilon() -> f64 {
    COLLISION_EPSILON
}

fn default_stride() -> usize {
    1
}

impl StepperConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        StepperConfig { scheme: Scheme::Rk4, dt, t_end, collision_epsilon: COLLISION_EPSILON, record_stride: 1 }
    }

    pub fn with_stride(self, record_stride: usize) -> Self {
        StepperConfig { record_stride, ..self }
    }

    /// `t_end = 0` is accepted and yields a single record.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Param(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::Param(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if !(self.collision_epsilon >= COLLISION_EPSILON) {
            return Err(Error::Param(format!(
                "collision_epsilon must be at least {COLLISION_EPSILON}, got {}",
                self.collision_epsilon
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Param("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    CollisionDetected {
        t: f64,
        pair: (usize, usize),
        min_distance: f64,
    },
    InjectivityViolated {
        t: f64,
        pair: Option<(usize, usize)>,
    },
    /// Any other error raised while stepping or evaluating diagnostics.
    Failed {
        t: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub energy: Vec<EnergyReport>,
    pub flocking: Vec<FlockingReport>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last_state(&self) -> &SystemState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

fn is_flat(b: Option<&GeometryBackend>) -> bool {
    matches!(b, None | Some(GeometryBackend::Euclidean { .. }))
}

/// Ambient derivative of `(x, w)`.
fn ambient_rhs(b: Option<&GeometryBackend>, s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    match b {
        None => dynamics::euclidean_rhs(s, p),
        Some(bk) => {
            let mut d = dynamics::manifold_rhs(bk, s, p)?;
            if !is_flat(b) {
                let m = s.dim;
                for i in 0..s.n() {
                    let r = i * m..(i + 1) * m;
                    let normal = bk.normal_acceleration(s.pos(i), &d.dx[r.clone()], s.mom(i));
                    for (a, n) in d.dw[r].iter_mut().zip(normal) {
                        *a += n;
                    }
                }
            }
            Ok(d)
        }
    }
}

/// `s + h·d`, pulled back onto the manifold when `b` is curved.
fn advance(b: Option<&GeometryBackend>, s: &SystemState, d: &Derivative, h: f64, t: f64) -> Result<SystemState> {
    let mut x: Vec<f64> = s.x.iter().zip(&d.dx).map(|(a, k)| a + h * k).collect();
    let mut w: Vec<f64> = s.w.iter().zip(&d.dw).map(|(a, k)| a + h * k).collect();
    if let (false, Some(bk)) = (is_flat(b), b) {
        retract(bk, s.dim, &mut x, &mut w)?;
    }
    Ok(SystemState { t, dim: s.dim, x, w })
}

fn retract(b: &GeometryBackend, m: usize, x: &mut [f64], w: &mut [f64]) -> Result<()> {
    for (xi, wi) in x.chunks_mut(m).zip(w.chunks_mut(m)) {
        let p = b.project_point(xi)?;
        let u = b.project_tangent(&p, wi);
        xi.copy_from_slice(&p);
        wi.copy_from_slice(&u);
    }
    Ok(())
}

fn step_with(
    scheme: Scheme,
    b: Option<&GeometryBackend>,
    s: &SystemState,
    p: &ModelParams,
    dt: f64,
) -> Result<SystemState> {
    let t1 = s.t + dt;
    let k1 = ambient_rhs(b, s, p)?;
    if scheme == Scheme::Euler {
        return advance(b, s, &k1, dt, t1);
    }
    let k2 = ambient_rhs(b, &advance(b, s, &k1, 0.5 * dt, s.t + 0.5 * dt)?, p)?;
    let k3 = ambient_rhs(b, &advance(b, s, &k2, 0.5 * dt, s.t + 0.5 * dt)?, p)?;
    let k4 = ambient_rhs(b, &advance(b, s, &k3, dt, t1)?, p)?;
    let combine = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|k| (a[k] + 2.0 * b[k] + 2.0 * c[k] + d[k]) / 6.0).collect()
    };
    let inc = Derivative { dx: combine(&k1.dx, &k2.dx, &k3.dx, &k4.dx), dw: combine(&k1.dw, &k2.dw, &k3.dw, &k4.dw) };
    advance(b, s, &inc, dt, t1)
}

/// One classical RK4 step of the flat-space system.
pub fn step_euclidean(s: &SystemState, p: &ModelParams, dt: f64) -> Result<SystemState> {
    step_with(Scheme::Rk4, None, s, p, dt)
}

/// One RK4 step on the manifold of `b`, with projected stages and a
/// retracted result.
pub fn step_manifold(b: &GeometryBackend, s: &SystemState, p: &ModelParams, dt: f64) -> Result<SystemState> {
    step_with(Scheme::Rk4, Some(b), s, p, dt)
}

/// Smallest separation over one step, assuming every relative position
/// moves along a straight chord between the two states. Returns
/// `(distance, i, j)` for the closest pair.
fn closest_approach(a: &SystemState, b: &SystemState) -> Option<(f64, usize, usize)> {
    let m = a.dim;
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..a.n() {
        for j in i + 1..a.n() {
            let r0: Vec<f64> = (0..m).map(|k| a.pos(j)[k] - a.pos(i)[k]).collect();
            let r1: Vec<f64> = (0..m).map(|k| b.pos(j)[k] - b.pos(i)[k]).collect();
            let dr: Vec<f64> = r1.iter().zip(&r0).map(|(p, q)| p - q).collect();
            let dd: f64 = dr.iter().map(|v| v * v).sum();
            let s = if dd > 0.0 {
                (-r0.iter().zip(&dr).map(|(p, q)| p * q).sum::<f64>() / dd).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = r0.iter().zip(&dr).map(|(p, q)| (p + s * q).powi(2)).sum::<f64>().sqrt();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    best
}

enum StepOutcome {
    Ok(SystemState),
    Collision { pair: (usize, usize), distance: f64 },
    Err(Error),
}

fn try_step(cfg: &StepperConfig, b: Option<&GeometryBackend>, s: &SystemState, p: &ModelParams, h: f64) -> StepOutcome {
    match step_with(cfg.scheme, b, s, p, h) {
        Ok(next) => match closest_approach(s, &next) {
            Some((d, i, j)) if d < cfg.collision_epsilon => StepOutcome::Collision { pair: (i, j), distance: d },
            _ => StepOutcome::Ok(next),
        },
        Err(Error::Collision { i, j, distance }) => StepOutcome::Collision { pair: (i, j), distance },
        Err(e) => StepOutcome::Err(e),
    }
}

/// Shrink the failing step `h` by bisection; returns the localised event
/// time and the pair and separation seen at the earliest failing trial.
fn localise(
    cfg: &StepperConfig,
    b: Option<&GeometryBackend>,
    s: &SystemState,
    p: &ModelParams,
    h: f64,
    mut pair: (usize, usize),
    mut distance: f64,
) -> (f64, (usize, usize), f64) {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..LOCALISATION_ITERS {
        let mid = 0.5 * (lo + hi);
        match try_step(cfg, b, s, p, mid) {
            StepOutcome::Ok(_) => lo = mid,
            StepOutcome::Collision { pair: q, distance: d } => {
                hi = mid;
                pair = q;
                distance = d;
            }
            StepOutcome::Err(_) => hi = mid,
        }
    }
    (s.t + hi, pair, distance)
}

struct Recorder<'a> {
    p: &'a ModelParams,
    b: Option<&'a GeometryBackend>,
    traj: Trajectory,
}

impl Recorder<'_> {
    fn push(&mut self, s: &SystemState) -> Result<()> {
        if self.traj.times.last() == Some(&s.t) {
            return Ok(());
        }
        let energy = diagnostics::energy_report(s, self.p, self.b)?;
        let flocking = diagnostics::flocking_metrics(s, self.p.c, self.b)?;
        self.traj.times.push(s.t);
        self.traj.states.push(s.clone());
        self.traj.energy.push(energy);
        self.traj.flocking.push(flocking);
        Ok(())
    }
}

fn termination_for(e: Error, t: f64) -> Termination {
    match e {
        Error::Injectivity { pair, .. } => Termination::InjectivityViolated { t, pair },
        Error::Antipodal { .. } => Termination::InjectivityViolated { t, pair: None },
        Error::Collision { i, j, distance } => {
            Termination::CollisionDetected { t, pair: (i, j), min_distance: distance }
        }
        other => Termination::Failed { t, reason: other.to_string() },
    }
}

/// Integrate from `s0` to `s0.t + cfg.t_end`, recording every
/// `record_stride` steps and always the final state. Events end the run
/// early and are reported in [`Trajectory::termination`].
pub fn simulate(s0: &SystemState, p: &ModelParams, cfg: &StepperConfig, b: Option<&GeometryBackend>) -> Trajectory {
    let mut rec = Recorder {
        p,
        b,
        traj: Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            energy: Vec::new(),
            flocking: Vec::new(),
            termination: Termination::Completed,
        },
    };
    let setup = cfg.validate().and_then(|_| p.validate()).and_then(|_| match b {
        Some(bk) => bk.validate(),
        None => Ok(()),
    });
    if let Err(e) = setup.and_then(|_| rec.push(s0)) {
        if rec.traj.states.is_empty() {
            rec.traj.times.push(s0.t);
            rec.traj.states.push(s0.clone());
        }
        rec.traj.termination = termination_for(e, s0.t);
        return rec.traj;
    }

    let t0 = s0.t;
    let n = cfg.n_steps();
    let mut s = s0.clone();
    for k in 0..n {
        let t_next = if k + 1 == n { t0 + cfg.t_end } else { t0 + (k + 1) as f64 * cfg.dt };
        let h = t_next - s.t;
        match try_step(cfg, b, &s, p, h) {
            StepOutcome::Ok(mut next) => {
                next.t = t_next;
                s = next;
            }
            StepOutcome::Collision { pair, distance } => {
                let (t, pair, min_distance) = localise(cfg, b, &s, p, h, pair, distance);
                let _ = rec.push(&s);
                rec.traj.termination = Termination::CollisionDetected { t, pair, min_distance };
                return rec.traj;
            }
            StepOutcome::Err(e) => {
                let _ = rec.push(&s);
                rec.traj.termination = termination_for(e, s.t);
                return rec.traj;
            }
        }
        if (k + 1) % cfg.record_stride == 0 || k + 1 == n {
            if let Err(e) = rec.push(&s) {
                rec.traj.termination = termination_for(e, s.t);
                return rec.traj;
            }
        }
    }
    rec.traj
}
