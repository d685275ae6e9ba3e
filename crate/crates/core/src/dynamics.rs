//! Right-hand sides of the particle system.
//!
//! For particle `i` the momentum equation is the sum of three terms:
//!
//! ```text
//! I_i = κ₀/N   Σ_j   φ(r_ij) (v_j − v_i)
//! J_i = κ₁/2N  Σ_j≠i ⟨v_j − v_i, e_ij⟩ e_ij
//! K_i = κ₂/2N  Σ_j≠i (r_ij − R_ij) e_ij
//! ```
//!
//! with `e_ij = (x_j − x_i)/r_ij`. On a manifold `x_j − x_i` becomes
//! `log_{x_i} x_j`, `v_j` is parallel transported to `x_i`, the inner product
//! is the metric and `r_ij` the geodesic distance. The same loop serves both
//! cases, so the Euclidean backend reproduces the flat equations exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryBackend;
use crate::relkin::{self, SpeedOfLight};

/// Pairs closer than this make the bonding unit vector meaningless.
pub const COLLISION_EPSILON: f64 = 1e-8;

/// Communication weight φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// φ(r) = (1 + r²)^(−β)
    CuckerSmale { beta: f64 },
    /// φ(r) = value
    Constant { value: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            KernelSpec::CuckerSmale { beta } => ("beta", beta),
            KernelSpec::Constant { value } => ("value", value),
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Param(format!("kernel {name} must be finite and non-negative, got {v}")));
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::CuckerSmale { beta } => (1.0 + r * r).powf(-beta),
            KernelSpec::Constant { value } => value,
        }
    }

    /// Supremum φ_M.
    pub fn max(&self) -> f64 {
        match *self {
            KernelSpec::CuckerSmale { .. } => 1.0,
            KernelSpec::Constant { value } => value,
        }
    }

    /// Minimum of φ on `[0, r_max]`. Both kernels are non-increasing.
    pub fn min_on(&self, r_max: f64) -> f64 {
        self.eval(r_max.max(0.0))
    }
}

pub fn kernel_eval(k: &KernelSpec, r: f64) -> f64 {
    k.eval(r)
}

pub fn kernel_min_on(k: &KernelSpec, r_max: f64) -> f64 {
    k.min_on(r_max)
}

/// Symmetric matrix of target pair distances with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TargetDistances {
    n: usize,
    data: Vec<f64>,
}

impl TargetDistances {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Param(format!("target row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        let t = TargetDistances { n, data };
        for i in 0..n {
            if t.get(i, i) != 0.0 {
                return Err(Error::Param(format!("target diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (a, b) = (t.get(i, j), t.get(j, i));
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::Param(format!(
                        "target distance ({i},{j}) = {a} is not a finite non-negative number"
                    )));
                }
                if a != b {
                    return Err(Error::Param(format!("target matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(t)
    }

    /// All off-diagonal targets equal to `r`.
    pub fn uniform(n: usize, r: f64) -> Result<Self> {
        let rows = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { r }).collect()).collect();
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| self.get(i, j)))
    }

    /// Smallest off-diagonal entry (`+∞` when there is none).
    pub fn min_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(f64::INFINITY, f64::min)
    }

    /// Largest off-diagonal entry (`0` when there is none).
    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for TargetDistances {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<TargetDistances> for Vec<Vec<f64>> {
    fn from(t: TargetDistances) -> Self {
        t.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: SpeedOfLight,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub targets: TargetDistances,
    pub kernel: KernelSpec,
}

impl ModelParams {
    pub fn n(&self) -> usize {
        self.targets.n()
    }

    pub fn with_c(&self, c: SpeedOfLight) -> Self {
        ModelParams { c, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa0", self.kappa0), ("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Param(format!("{name} must be finite and non-negative, got {k}")));
            }
        }
        if self.n() == 0 {
            return Err(Error::Param("at least one particle is required".into()));
        }
        self.kernel.validate()
    }

    fn bonding(&self) -> bool {
        self.kappa1 > 0.0 || self.kappa2 > 0.0
    }
}

/// Positions and momenta of all particles, stored flat with `dim` ambient
/// coordinates per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub dim: usize,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl SystemState {
    pub fn new(t: f64, positions: &[Vec<f64>], momenta: &[Vec<f64>]) -> Result<Self> {
        if positions.is_empty() || positions.len() != momenta.len() {
            return Err(Error::Param(format!(
                "need the same positive number of positions and momenta, got {} and {}",
                positions.len(),
                momenta.len()
            )));
        }
        let dim = positions[0].len();
        if dim == 0 || positions.iter().chain(momenta).any(|p| p.len() != dim) {
            return Err(Error::Param("all positions and momenta must share one positive dimension".into()));
        }
        Ok(SystemState { t, dim, x: positions.concat(), w: momenta.concat() })
    }

    /// Build a state from velocities instead of momenta.
    pub fn from_velocities(t: f64, positions: &[Vec<f64>], velocities: &[Vec<f64>], c: SpeedOfLight) -> Result<Self> {
        let momenta = velocities.iter().map(|v| relkin::to_momentum(v, c)).collect::<Result<Vec<_>>>()?;
        Self::new(t, positions, &momenta)
    }

    pub fn n(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn pos(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mom(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn momentum_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for i in 0..self.n() {
            for (a, b) in s.iter_mut().zip(self.mom(i)) {
                *a += b;
            }
        }
        s
    }

    /// Flat velocities `v̂(w_i)`, with `|w_i|` measured in the metric of `b`.
    pub fn velocities(&self, c: SpeedOfLight, b: Option<&GeometryBackend>) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(self.w.len());
        for i in 0..self.n() {
            let w = self.mom(i);
            let m = match b {
                Some(b) => b.norm(self.pos(i), w),
                None => relkin::norm(w),
            };
            let k = relkin::velocity_scale(m, c)?;
            v.extend(w.iter().map(|c| k * c));
        }
        Ok(v)
    }

    fn check_params(&self, p: &ModelParams) -> Result<()> {
        if self.n() != p.n() {
            return Err(Error::Param(format!("state has {} particles but targets are {}x{}", self.n(), p.n(), p.n())));
        }
        Ok(())
    }
}

/// Time derivative of a [`SystemState`]. On a manifold `dw` holds the
/// covariant derivative `Dw/dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub dx: Vec<f64>,
    pub dw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceDecomposition {
    pub alignment: Vec<f64>,
    pub velocity_bonding: Vec<f64>,
    pub spring_bonding: Vec<f64>,
}

impl ForceDecomposition {
    pub fn total(&self) -> Vec<f64> {
        self.alignment
            .iter()
            .zip(&self.velocity_bonding)
            .zip(&self.spring_bonding)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

fn flat(s: &SystemState) -> GeometryBackend {
    GeometryBackend::Euclidean { dim: s.dim }
}

fn check_backend(b: &GeometryBackend, s: &SystemState) -> Result<()> {
    if b.ambient_dim() != s.dim {
        return Err(Error::Param(format!(
            "backend expects {} ambient coordinates, state has {}",
            b.ambient_dim(),
            s.dim
        )));
    }
    Ok(())
}

/// The three force terms on particle `i`, given precomputed velocities.
fn forces_on(b: &GeometryBackend, s: &SystemState, v: &[f64], p: &ModelParams, i: usize) -> Result<ForceDecomposition> {
    let m = s.dim;
    let n = s.n();
    let nf = n as f64;
    let xi = s.pos(i);
    let vi = &v[i * m..(i + 1) * m];
    let mut out =
        ForceDecomposition { alignment: vec![0.0; m], velocity_bonding: vec![0.0; m], spring_bonding: vec![0.0; m] };
    let curved = !matches!(b, GeometryBackend::Euclidean { .. });
    let radius = b.injectivity_radius();
    for j in 0..n {
        if j == i {
            continue;
        }
        let xj = s.pos(j);
        let vj = &v[j * m..(j + 1) * m];
        let l = b.log(xi, xj).map_err(|e| match e {
            Error::Antipodal { angle } => {
                Error::Injectivity { distance: angle * radius / std::f64::consts::PI, radius, pair: Some((i, j)) }
            }
            other => other,
        })?;
        let r = b.norm(xi, &l);
        if r >= radius {
            return Err(Error::Injectivity { distance: r, radius, pair: Some((i, j)) });
        }
        let vj_at_i = if curved { b.transport(xj, xi, vj)? } else { vj.to_vec() };
        let dv: Vec<f64> = vj_at_i.iter().zip(vi).map(|(a, b)| a - b).collect();

        let a = p.kappa0 / nf * p.kernel.eval(r);
        for (o, d) in out.alignment.iter_mut().zip(&dv) {
            *o += a * d;
        }
        if p.bonding() {
            if r <= COLLISION_EPSILON {
                return Err(Error::Collision { i, j, distance: r });
            }
            let e: Vec<f64> = l.iter().map(|c| c / r).collect();
            let kj = p.kappa1 / (2.0 * nf) * b.inner(xi, &dv, &e);
            let kk = p.kappa2 / (2.0 * nf) * (r - p.targets.get(i, j));
            for ((vb, sb), ek) in out.velocity_bonding.iter_mut().zip(out.spring_bonding.iter_mut()).zip(&e) {
                *vb += kj * ek;
                *sb += kk * ek;
            }
        }
    }
    Ok(out)
}

fn assemble(b: &GeometryBackend, s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    s.check_params(p)?;
    check_backend(b, s)?;
    let v = s.velocities(p.c, Some(b))?;
    let mut dw = Vec::with_capacity(s.w.len());
    for i in 0..s.n() {
        dw.extend(forces_on(b, s, &v, p, i)?.total());
    }
    Ok(Derivative { dx: v, dw })
}

/// Relativistic system in flat space.
pub fn euclidean_rhs(s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    assemble(&flat(s), s, p)
}

/// Classical system (`w ≡ v`), i.e. [`euclidean_rhs`] with `c = ∞`.
pub fn classical_rhs(s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    euclidean_rhs(s, &p.with_c(SpeedOfLight::Infinite))
}

/// Relativistic system on the manifold of `b`; `dw` is the covariant
/// derivative and is tangent at each `x_i`.
pub fn manifold_rhs(b: &GeometryBackend, s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    assemble(b, s, p)
}

/// Split of the momentum right-hand side of particle `i` into alignment,
/// velocity-bonding and spring-bonding parts.
pub fn force_decomposition(
    s: &SystemState,
    p: &ModelParams,
    i: usize,
    b: Option<&GeometryBackend>,
) -> Result<ForceDecomposition> {
    s.check_params(p)?;
    if i >= s.n() {
        return Err(Error::Param(format!("particle index {i} out of range for {} particles", s.n())));
    }
    let b = b.copied().unwrap_or_else(|| flat(s));
    check_backend(&b, s)?;
    let v = s.velocities(p.c, Some(&b))?;
    forces_on(&b, s, &v, p, i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, c: SpeedOfLight, r: f64) -> ModelParams {
        ModelParams {
            c,
            kappa0: 1.0,
            kappa1: 0.7,
            kappa2: 1.3,
            targets: TargetDistances::uniform(n, r).unwrap(),
            kernel: KernelSpec::CuckerSmale { beta: 0.5 },
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(&KernelSpec::CuckerSmale { beta: 0.7 }, 0.0), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::CuckerSmale { beta: 0.5 }, 3f64.sqrt()), 0.5);
        assert_eq!(kernel_eval(&KernelSpec::Constant { value: 0.7 }, 12.0), 0.7);
        assert_eq!(kernel_min_on(&KernelSpec::CuckerSmale { beta: 1.0 }, 1.0), 0.5);
        assert_eq!(kernel_min_on(&KernelSpec::Constant { value: 0.7 }, 5.0), 0.7);
        assert_eq!(kernel_min_on(&KernelSpec::CuckerSmale { beta: 2.0 }, 0.0), 1.0);
    }

    #[test]
    fn targets_are_validated() {
        assert!(TargetDistances::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(TargetDistances::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(TargetDistances::new(vec![vec![0.0, 1.0]]).is_err());
        let t = TargetDistances::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]]).unwrap();
        assert_eq!(t.min_off_diagonal(), 1.0);
        assert_eq!(t.max_off_diagonal(), 3.0);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<TargetDistances>(&json).unwrap(), t);
    }

    #[test]
    fn equilibrium_pair_has_zero_force() {
        let p = params(2, SpeedOfLight::Finite(3.0), 1.5);
        let s = SystemState::new(0.0, &[vec![0.0, 0.0], vec![1.5, 0.0]], &[vec![0.2, 0.1], vec![0.2, 0.1]]).unwrap();
        let d = euclidean_rhs(&s, &p).unwrap();
        assert!(d.dw.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn classical_is_infinite_c() {
        let p = params(3, SpeedOfLight::Finite(2.0), 1.0);
        let s = SystemState::new(
            0.0,
            &[vec![0.0, 0.0], vec![1.0, 0.3], vec![-0.4, 0.9]],
            &[vec![0.3, -0.2], vec![-0.5, 0.1], vec![0.2, 0.4]],
        )
        .unwrap();
        let a = classical_rhs(&s, &p).unwrap();
        let b = euclidean_rhs(&s, &p.with_c(SpeedOfLight::Infinite)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dx, s.w);
    }

    #[test]
    fn head_on_pair_is_antisymmetric() {
        let p = params(2, SpeedOfLight::Infinite, 1.0);
        let s = SystemState::new(0.0, &[vec![-0.7], vec![0.7]], &[vec![0.4], vec![-0.4]]).unwrap();
        let d = classical_rhs(&s, &p).unwrap();
        assert_eq!(d.dw[0], -d.dw[1]);
    }

    #[test]
    fn collision_is_rejected_only_with_bonding() {
        let mut p = params(2, SpeedOfLight::Infinite, 1.0);
        let s = SystemState::new(0.0, &[vec![0.0, 0.0], vec![0.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(euclidean_rhs(&s, &p), Err(Error::Collision { i: 0, j: 1, .. })));
        p.kappa1 = 0.0;
        p.kappa2 = 0.0;
        let d = euclidean_rhs(&s, &p).unwrap();
        assert_eq!(d.dw, vec![-0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn decomposition_special_cases() {
        let mut p = params(3, SpeedOfLight::Finite(4.0), 1.0);
        let same = vec![0.3, -0.1];
        let s = SystemState::new(
            0.0,
            &[vec![0.0, 0.0], vec![1.0, 0.3], vec![-0.4, 0.9]],
            &[same.clone(), same.clone(), same],
        )
        .unwrap();
        let f = force_decomposition(&s, &p, 1, None).unwrap();
        assert!(f.alignment.iter().chain(&f.velocity_bonding).all(|&x| x == 0.0));
        p.kappa1 = 0.0;
        p.kappa2 = 0.0;
        let f = force_decomposition(&s, &p, 2, None).unwrap();
        assert!(f.velocity_bonding.iter().chain(&f.spring_bonding).all(|&x| x == 0.0));
    }

    #[test]
    fn sphere_pair_at_rest_on_target_is_stationary() {
        let b = GeometryBackend::sphere(2, 1.0);
        let theta = 1.1;
        let p = params(2, SpeedOfLight::Finite(5.0), theta);
        let s = SystemState::new(
            0.0,
            &[vec![0.0, 0.0, 1.0], vec![theta.sin(), 0.0, theta.cos()]],
            &[vec![0.0; 3], vec![0.0; 3]],
        )
        .unwrap();
        let d = manifold_rhs(&b, &s, &p).unwrap();
        assert!(d.dw.iter().all(|x| x.abs() < 1e-15), "{:?}", d.dw);
    }

    #[test]
    fn antipodal_pair_reports_injectivity() {
        let b = GeometryBackend::sphere(2, 1.0);
        let p = params(2, SpeedOfLight::Finite(5.0), 1.0);
        let s =
            SystemState::new(0.0, &[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]], &[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert!(matches!(manifold_rhs(&b, &s, &p), Err(Error::Injectivity { pair: Some((0, 1)), .. })));
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let p = params(3, SpeedOfLight::Infinite, 1.0);
        let s = SystemState::new(0.0, &[vec![0.0], vec![1.0]], &[vec![0.0], vec![0.0]]).unwrap();
        assert!(matches!(euclidean_rhs(&s, &p), Err(Error::Param(_))));
        let b = GeometryBackend::sphere(2, 1.0);
        assert!(matches!(manifold_rhs(&b, &s, &params(2, SpeedOfLight::Infinite, 1.0)), Err(Error::Param(_))));
    }
}
