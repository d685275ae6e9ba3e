//! Energies, energy production, the dissipation identity, a-priori distance
//! bounds, sufficient-condition checkers and flocking/deviation metrics.
//!
//! Every function taking `b: Option<&GeometryBackend>` uses flat space when
//! `b` is `None`; on a manifold distances are geodesic, velocities of other
//! particles are parallel transported before comparison and inner products
//! use the metric.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParams, SystemState};
use crate::error::{Error, Result};
use crate::geometry::GeometryBackend;
use crate::integrate::Trajectory;
use crate::relkin::{self, SpeedOfLight};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub production: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlockingReport {
    pub max_rel_speed: f64,
    pub min_pair_dist: f64,
    pub max_pair_dist: f64,
    /// `|Σ w_i|`; only meaningful in flat space, `None` otherwise.
    pub momentum_sum_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub r_lower: f64,
    pub r_upper: f64,
    pub collision_avoidance_ok: bool,
    pub flocking_hypotheses_ok: bool,
    /// `None` for flat space.
    pub manifold_wellposed_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub times: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub sup_d: f64,
}

fn flat(s: &SystemState) -> GeometryBackend {
    GeometryBackend::Euclidean { dim: s.dim }
}

fn backend(s: &SystemState, b: Option<&GeometryBackend>) -> GeometryBackend {
    b.copied().unwrap_or_else(|| flat(s))
}

fn is_flat(b: &GeometryBackend) -> bool {
    matches!(b, GeometryBackend::Euclidean { .. })
}

fn pair_distance(b: &GeometryBackend, s: &SystemState, i: usize, j: usize) -> Result<f64> {
    b.distance(s.pos(i), s.pos(j)).map_err(|e| match e {
        Error::Antipodal { angle } => {
            let radius = b.injectivity_radius();
            Error::Injectivity { distance: angle * radius / std::f64::consts::PI, radius, pair: Some((i, j)) }
        }
        other => other,
    })
}

/// `Σ_i [c²(Γ_i − 1) + Γ_i² − ln Γ_i]`, or `Σ_i |v_i|²/2 + N` for `c = ∞`.
pub fn kinetic_energy(s: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> Result<f64> {
    let b = backend(s, b);
    let v = s.velocities(p.c, Some(&b))?;
    let mut e = 0.0;
    for i in 0..s.n() {
        let vi = &v[i * s.dim..(i + 1) * s.dim];
        e += relkin::kinetic_energy_from_speed(b.norm(s.pos(i), vi), p.c)?;
    }
    Ok(e)
}

/// `κ₂/(8N) Σ_{i≠j} (r_ij − R_ij)²`.
pub fn potential_energy(s: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> Result<f64> {
    let b = backend(s, b);
    let n = s.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let r = pair_distance(&b, s, i, j)?;
                acc += (r - p.targets.get(i, j)).powi(2);
            }
        }
    }
    Ok(p.kappa2 / (8.0 * n as f64) * acc)
}

/// Energy production rate
/// `κ₀/(2N) Σ_{i,j} φ(r_ij)|v_j − v_i|² + κ₁/(4N) Σ_{i≠j} ⟨v_j − v_i, e_ij⟩²`.
pub fn energy_production(s: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> Result<f64> {
    let b = backend(s, b);
    let n = s.n();
    let m = s.dim;
    let nf = n as f64;
    let v = s.velocities(p.c, Some(&b))?;
    let (mut align, mut bond) = (0.0, 0.0);
    for i in 0..n {
        let xi = s.pos(i);
        let vi = &v[i * m..(i + 1) * m];
        for j in 0..n {
            if i == j {
                continue;
            }
            let xj = s.pos(j);
            let vj = &v[j * m..(j + 1) * m];
            let r = pair_distance(&b, s, i, j)?;
            let vj_at_i = if is_flat(&b) { vj.to_vec() } else { b.transport(xj, xi, vj)? };
            let dv: Vec<f64> = vj_at_i.iter().zip(vi).map(|(a, c)| a - c).collect();
            align += p.kernel.eval(r) * b.inner(xi, &dv, &dv);
            if p.kappa1 > 0.0 {
                if r <= crate::dynamics::COLLISION_EPSILON {
                    return Err(Error::Collision { i, j, distance: r });
                }
                let l = b.log(xi, xj)?;
                bond += (b.inner(xi, &dv, &l) / r).powi(2);
            }
        }
    }
    Ok(p.kappa0 / (2.0 * nf) * align + p.kappa1 / (4.0 * nf) * bond)
}

pub fn energy_report(s: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> Result<EnergyReport> {
    let kinetic = kinetic_energy(s, p, b)?;
    let potential = potential_energy(s, p, b)?;
    Ok(EnergyReport { kinetic, potential, total: kinetic + potential, production: energy_production(s, p, b)? })
}

/// Running integral `∫_{t_0}^{t_k} f` of samples on a (possibly nonuniform)
/// grid. Each interval integrates the cubic through the four nearest nodes,
/// exactly, by two-point Gauss; fewer nodes fall back to lower degree.
pub fn cumulative_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len().min(values.len());
    let mut out = vec![0.0; n];
    let g = 0.5 / 3f64.sqrt();
    for k in 0..n.saturating_sub(1) {
        let width = 4.min(n);
        let start = k.saturating_sub(1).min(n - width);
        let nodes = &times[start..start + width];
        let vals = &values[start..start + width];
        let (a, b) = (times[k], times[k + 1]);
        let mid = 0.5 * (a + b);
        let h = b - a;
        let interp = |t: f64| -> f64 {
            let mut sum = 0.0;
            for (q, (&tq, &fq)) in nodes.iter().zip(vals).enumerate() {
                let mut l = 1.0;
                for (r, &tr) in nodes.iter().enumerate() {
                    if r != q {
                        l *= (t - tr) / (tq - tr);
                    }
                }
                sum += l * fq;
            }
            sum
        };
        out[k + 1] = out[k] + 0.5 * h * (interp(mid - g * h) + interp(mid + g * h));
    }
    out
}

/// `max_k |E(t_k) + ∫₀^{t_k} P − E(0)| / max(1, E(0))` over the records.
pub fn energy_identity_residual(traj: &Trajectory) -> f64 {
    if traj.energy.is_empty() {
        return 0.0;
    }
    let production: Vec<f64> = traj.energy.iter().map(|e| e.production).collect();
    let integral = cumulative_integral(&traj.times, &production);
    let e0 = traj.energy[0].total;
    traj.energy.iter().zip(&integral).map(|(e, i)| (e.total + i - e0).abs()).fold(0.0, f64::max) / e0.max(1.0)
}

fn excess_radius(p: &ModelParams, e0: f64) -> Result<f64> {
    if !(p.kappa2 > 0.0) {
        return Err(Error::Param("distance bounds need kappa2 > 0".into()));
    }
    let n = p.n() as f64;
    Ok((4.0 * n * (e0 - n).max(0.0) / p.kappa2).sqrt())
}

/// A-priori bounds `(min R − δ, max R + δ)` with `δ = √(4N(E0 − N)/κ₂)`.
pub fn distance_bounds(p: &ModelParams, e0: f64) -> Result<(f64, f64)> {
    let delta = excess_radius(p, e0)?;
    Ok((p.targets.min_off_diagonal() - delta, p.targets.max_off_diagonal() + delta))
}

/// `E0 < N + κ₂/(4N) · (min R)²`.
pub fn check_collision_avoidance(p: &ModelParams, e0: f64) -> Result<bool> {
    if !(p.kappa2 > 0.0) {
        return Err(Error::Param("collision avoidance check needs kappa2 > 0".into()));
    }
    let n = p.n() as f64;
    let r = p.targets.min_off_diagonal();
    Ok(e0 < n + p.kappa2 / (4.0 * n) * r * r)
}

/// Hypotheses of the flocking theorem: distinct initial positions, positive
/// couplings, a kernel bounded away from zero up to `r_upper`, and (in flat
/// space) zero total momentum.
pub fn check_flocking_hypotheses(p: &ModelParams, s0: &SystemState, r_upper: f64, b: Option<&GeometryBackend>) -> bool {
    let bk = backend(s0, b);
    let n = s0.n();
    let mut distinct = true;
    for i in 0..n {
        for j in i + 1..n {
            match pair_distance(&bk, s0, i, j) {
                Ok(r) if r > 0.0 => {}
                _ => distinct = false,
            }
        }
    }
    let couplings = p.kappa0 > 0.0 && p.kappa1 > 0.0 && p.kappa2 > 0.0;
    let kernel = r_upper.is_finite() && p.kernel.min_on(r_upper) > 0.0;
    let zero_sum = !is_flat(&bk) || relkin::norm(&s0.momentum_sum()) <= 1e-12;
    distinct && couplings && kernel && zero_sum
}

/// `max R < inj(M)` and `E0 < N + κ₂/(4N) · min(min R, inj − max R)²`.
pub fn check_manifold_wellposedness(b: &GeometryBackend, p: &ModelParams, e0: f64) -> Result<bool> {
    if !(p.kappa2 > 0.0) {
        return Err(Error::Param("well-posedness check needs kappa2 > 0".into()));
    }
    let inj = b.injectivity_radius();
    let (rmin, rmax) = (p.targets.min_off_diagonal(), p.targets.max_off_diagonal());
    if !(rmax < inj) {
        return Ok(false);
    }
    let n = p.n() as f64;
    let margin = rmin.min(inj - rmax);
    Ok(e0 < n + p.kappa2 / (4.0 * n) * margin * margin)
}

/// Evaluate all sufficient conditions at the initial state `s0`, using its
/// own total energy as `E0`.
pub fn admissibility(s0: &SystemState, p: &ModelParams, b: Option<&GeometryBackend>) -> Result<AdmissibilityReport> {
    let e0 = kinetic_energy(s0, p, b)? + potential_energy(s0, p, b)?;
    let (r_lower, r_upper) = distance_bounds(p, e0)?;
    let manifold_wellposed_ok = match b {
        Some(bk) if !is_flat(bk) => Some(check_manifold_wellposedness(bk, p, e0)?),
        _ => None,
    };
    Ok(AdmissibilityReport {
        r_lower,
        r_upper,
        collision_avoidance_ok: check_collision_avoidance(p, e0)?,
        flocking_hypotheses_ok: check_flocking_hypotheses(p, s0, r_upper, b),
        manifold_wellposed_ok,
    })
}

/// Pair-distance extremes and the largest velocity mismatch
/// `max_{i,j} ‖P_ij v_j − v_i‖`.
pub fn flocking_metrics(s: &SystemState, c: SpeedOfLight, b: Option<&GeometryBackend>) -> Result<FlockingReport> {
    let bk = backend(s, b);
    let v = s.velocities(c, Some(&bk))?;
    let rel = max_relative(&bk, s, &v)?;
    let n = s.n();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..n {
        for j in i + 1..n {
            let r = pair_distance(&bk, s, i, j)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if n < 2 {
        lo = 0.0;
    }
    Ok(FlockingReport {
        max_rel_speed: rel,
        min_pair_dist: lo,
        max_pair_dist: hi,
        momentum_sum_norm: is_flat(&bk).then(|| relkin::norm(&s.momentum_sum())),
    })
}

/// Same as the velocity mismatch of [`flocking_metrics`] but for momenta.
pub fn max_relative_momentum(s: &SystemState, b: Option<&GeometryBackend>) -> Result<f64> {
    max_relative(&backend(s, b), s, &s.w)
}

fn max_relative(b: &GeometryBackend, s: &SystemState, u: &[f64]) -> Result<f64> {
    let m = s.dim;
    let mut best = 0.0_f64;
    for i in 0..s.n() {
        let (xi, ui) = (s.pos(i), &u[i * m..(i + 1) * m]);
        for j in 0..s.n() {
            if i == j {
                continue;
            }
            let uj = &u[j * m..(j + 1) * m];
            let uj = if is_flat(b) { uj.to_vec() } else { b.transport(s.pos(j), xi, uj)? };
            let d: Vec<f64> = uj.iter().zip(ui).map(|(a, c)| a - c).collect();
            best = best.max(b.norm(xi, &d));
        }
    }
    Ok(best)
}

/// `max_i |v_i|` in the metric of `b`.
pub fn max_speed(s: &SystemState, c: SpeedOfLight, b: Option<&GeometryBackend>) -> Result<f64> {
    let bk = backend(s, b);
    let v = s.velocities(c, Some(&bk))?;
    Ok((0..s.n()).map(|i| bk.norm(s.pos(i), &v[i * s.dim..(i + 1) * s.dim])).fold(0.0, f64::max))
}

/// `D(t) = Σ_i |x_i^c − x_i^∞|² + |w_i^c − w_i^∞|²` on a shared time grid.
pub fn deviation(traj_c: &Trajectory, traj_inf: &Trajectory) -> Result<DeviationSeries> {
    if traj_c.times.len() != traj_inf.times.len() {
        return Err(Error::GridMismatch(format!("{} records against {}", traj_c.times.len(), traj_inf.times.len())));
    }
    let mut d = Vec::with_capacity(traj_c.times.len());
    for (k, (a, b)) in traj_c.states.iter().zip(&traj_inf.states).enumerate() {
        let (ta, tb) = (traj_c.times[k], traj_inf.times[k]);
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("record {k} at t = {ta} against t = {tb}")));
        }
        if a.x.len() != b.x.len() {
            return Err(Error::GridMismatch(format!("record {k} has different state sizes")));
        }
        let sq = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        d.push(sq(&a.x, &b.x) + sq(&a.w, &b.w));
    }
    let sup_d = d.iter().copied().fold(0.0, f64::max);
    Ok(DeviationSeries { times: traj_c.times.clone(), d, sup_d })
}

/// Kinetic energy written in momenta with the speed of light `c`:
/// `Σ_i c²(Γ̃_i − 1) + Γ̃_i² − ln Γ̃_i` with `Γ̃_i = c/√(c² − |w_i|²)`.
/// Requires `|w_i| < c`; the classical member is `Σ|w_i|²/2 + N`.
pub fn momentum_kinetic_energy(s: &SystemState, c: SpeedOfLight) -> Result<f64> {
    let mut e = 0.0;
    for i in 0..s.n() {
        e += relkin::kinetic_energy_from_speed(relkin::norm(s.mom(i)), c)?;
    }
    Ok(e)
}

/// Uniform-in-`c` energy condition for the nonrelativistic limit, checked
/// for both the relativistic member at `c` and the classical member:
/// `Ẽ_k(0) + E_p(0) ≤ N + κ₂/(4N) (min R)²`.
pub fn check_uniform_energy_condition(s0: &SystemState, p: &ModelParams, c: SpeedOfLight) -> Result<bool> {
    if !(p.kappa2 > 0.0) {
        return Err(Error::Param("uniform energy condition needs kappa2 > 0".into()));
    }
    let n = p.n() as f64;
    let r = p.targets.min_off_diagonal();
    let bound = n + p.kappa2 / (4.0 * n) * r * r;
    let ep = potential_energy(s0, p, None)?;
    let relativistic = match momentum_kinetic_energy(s0, c) {
        Ok(ek) => ek + ep <= bound,
        Err(Error::Domain { .. }) => false,
        Err(e) => return Err(e),
    };
    let classical = momentum_kinetic_energy(s0, SpeedOfLight::Infinite)? + ep <= bound;
    Ok(relativistic && classical)
}
