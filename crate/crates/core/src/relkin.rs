//! Relativistic kinematics: the Lorentz factor, the velocity-to-momentum map
//! `w = F(|v|) v` with `F = Γ(1 + Γ/c²)`, its numerical inverse, and the
//! per-particle relativistic kinetic energy `c²(Γ − 1) + Γ² − ln Γ`.
//!
//! All quantities are dimensionless. The classical model is selected with
//! [`SpeedOfLight::Infinite`], for which every map here is the identity (or
//! its classical limit) exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light `c`, either a positive finite value or the classical limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpeedRepr", into = "SpeedRepr")]
pub enum SpeedOfLight {
    Finite(f64),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpeedRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<SpeedRepr> for SpeedOfLight {
    type Error = String;

    fn try_from(repr: SpeedRepr) -> Result<Self, String> {
        match repr {
            SpeedRepr::Number(c) if c.is_infinite() && c > 0.0 => Ok(SpeedOfLight::Infinite),
            SpeedRepr::Number(c) => SpeedOfLight::finite(c).map_err(|e| e.to_string()),
            SpeedRepr::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinite" | "infinity" => Ok(SpeedOfLight::Infinite),
                other => other
                    .parse::<f64>()
                    .map_err(|_| format!("invalid speed of light {s:?}"))
                    .and_then(|c| SpeedOfLight::finite(c).map_err(|e| e.to_string())),
            },
        }
    }
}

impl From<SpeedOfLight> for SpeedRepr {
    fn from(c: SpeedOfLight) -> Self {
        match c {
            SpeedOfLight::Finite(c) => SpeedRepr::Number(c),
            SpeedOfLight::Infinite => SpeedRepr::Text("inf".to_string()),
        }
    }
}

impl SpeedOfLight {
    pub fn finite(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(SpeedOfLight::Finite(c))
        } else {
            Err(Error::Param(format!("speed of light must be positive and finite, got {c}")))
        }
    }

    /// Numeric value; `f64::INFINITY` for the classical limit.
    pub fn value(self) -> f64 {
        match self {
            SpeedOfLight::Finite(c) => c,
            SpeedOfLight::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SpeedOfLight::Infinite)
    }
}

impl std::fmt::Display for SpeedOfLight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpeedOfLight::Finite(c) => write!(f, "{c}"),
            SpeedOfLight::Infinite => write!(f, "inf"),
        }
    }
}

fn check_speed(speed: f64, c: f64) -> Result<()> {
    if !(speed >= 0.0) || speed >= c {
        return Err(Error::Domain { speed, c });
    }
    Ok(())
}

/// `1 − (s/c)²`, evaluated as a product to keep precision near `s → c`.
fn one_minus_beta_sq(speed: f64, c: f64) -> f64 {
    let beta = speed / c;
    (1.0 - beta) * (1.0 + beta)
}

/// Lorentz factor `Γ = 1/√(1 − s²/c²)`.
pub fn lorentz_factor(speed: f64, c: SpeedOfLight) -> Result<f64> {
    match c {
        SpeedOfLight::Infinite => {
            check_speed(speed, f64::INFINITY)?;
            Ok(1.0)
        }
        SpeedOfLight::Finite(c) => {
            check_speed(speed, c)?;
            Ok(1.0 / one_minus_beta_sq(speed, c).sqrt())
        }
    }
}

/// Momentum factor `F = Γ(1 + Γ/c²)` so that `w = F v`.
pub fn momentum_factor(speed: f64, c: SpeedOfLight) -> Result<f64> {
    match c {
        SpeedOfLight::Infinite => {
            check_speed(speed, f64::INFINITY)?;
            Ok(1.0)
        }
        SpeedOfLight::Finite(cv) => {
            let gamma = lorentz_factor(speed, c)?;
            Ok(gamma * (1.0 + gamma / (cv * cv)))
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Velocity to momentum: `w = F(|v|) v`.
pub fn to_momentum(v: &[f64], c: SpeedOfLight) -> Result<Vec<f64>> {
    let f = momentum_factor(norm(v), c)?;
    Ok(v.iter().map(|x| f * x).collect())
}

const MAX_NEWTON_ITERS: usize = 200;
const SPEED_RTOL: f64 = 1e-14;

/// Solves `F(s)·s = m` for the speed `s ∈ [0, c)`.
///
/// Safeguarded Newton iteration: every iterate is kept inside a bracket
/// `[lo, hi]` of the root and a bisection step replaces any Newton step that
/// leaves it.
pub fn speed_from_momentum(m: f64, c: SpeedOfLight) -> Result<f64> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Convergence { momentum: m });
    }
    let cv = match c {
        SpeedOfLight::Infinite => return Ok(m),
        SpeedOfLight::Finite(cv) => cv,
    };
    if m == 0.0 {
        return Ok(0.0);
    }
    let c2 = cv * cv;
    // g(s) = s Γ (1 + Γ/c²) − m, strictly increasing on [0, c).
    let eval = |s: f64| -> (f64, f64) {
        let gamma = 1.0 / one_minus_beta_sq(s, cv).sqrt();
        let f = gamma * (1.0 + gamma / c2);
        let dgamma = s * gamma * gamma * gamma / c2;
        let df = dgamma * (1.0 + 2.0 * gamma / c2);
        (s * f - m, f + s * df)
    };

    // F ≥ F(0) = 1 + 1/c², so the root lies below m / F(0).
    let s_cap = cv * (1.0 - 1e-16);
    let mut lo = 0.0_f64;
    let mut hi = (m / (1.0 + 1.0 / c2)).min(s_cap);

    // Initial guess: the small-speed estimate, or for large momenta the
    // ultra-relativistic estimate from Γ²/c + cΓ ≈ m.
    let mut s = hi;
    let gamma_guess = 0.5 * cv * (-cv + (c2 + 4.0 * m / cv).sqrt());
    if gamma_guess > 1.0 {
        let s_rel = cv * (1.0 - 1.0 / (gamma_guess * gamma_guess)).sqrt();
        if s_rel < hi {
            s = s_rel;
        }
    }

    for _ in 0..MAX_NEWTON_ITERS {
        let (g, dg) = eval(s);
        if g == 0.0 {
            return Ok(s);
        }
        if g < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - g / dg;
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= SPEED_RTOL * next.max(f64::MIN_POSITIVE) || hi - lo <= SPEED_RTOL * hi {
            return Ok(next);
        }
        s = next;
    }
    Err(Error::Convergence { momentum: m })
}

/// Ratio `|v| / |w| = 1/F` for a momentum of norm `m`.
pub fn velocity_scale(m: f64, c: SpeedOfLight) -> Result<f64> {
    if m == 0.0 {
        return Ok(1.0 / momentum_factor(0.0, c)?);
    }
    Ok(speed_from_momentum(m, c)? / m)
}

/// Momentum to velocity, the inverse of [`to_momentum`].
pub fn to_velocity(w: &[f64], c: SpeedOfLight) -> Result<Vec<f64>> {
    let scale = velocity_scale(norm(w), c)?;
    Ok(w.iter().map(|x| scale * x).collect())
}

/// Relativistic kinetic energy of a particle moving at `speed`.
///
/// `c²(Γ − 1)` is evaluated as `Γ s² / (1 + √(1 − β²))` so the classical
/// limit does not cancel catastrophically. For `c = ∞` this is `s²/2 + 1`.
pub fn kinetic_energy_from_speed(speed: f64, c: SpeedOfLight) -> Result<f64> {
    match c {
        SpeedOfLight::Infinite => {
            check_speed(speed, f64::INFINITY)?;
            Ok(0.5 * speed * speed + 1.0)
        }
        SpeedOfLight::Finite(cv) => {
            check_speed(speed, cv)?;
            let root = one_minus_beta_sq(speed, cv).sqrt();
            let gamma = 1.0 / root;
            let beta_sq = (speed / cv).powi(2);
            let rest = gamma * speed * speed / (1.0 + root);
            let ln_gamma = -0.5 * (-beta_sq).ln_1p();
            // Γ² − ln Γ = 1 + Γ²β² − ln Γ
            Ok(rest + 1.0 + gamma * gamma * beta_sq - ln_gamma)
        }
    }
}

pub fn particle_kinetic_energy(v: &[f64], c: SpeedOfLight) -> Result<f64> {
    kinetic_energy_from_speed(norm(v), c)
}
