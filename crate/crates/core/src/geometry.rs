//! Closed-form Riemannian geometry for three backends embedded in ambient
//! coordinates:
//!
//! * `Euclidean(d)`: points and tangents in ℝᵈ.
//! * `Sphere(d, ρ)`: `{x ∈ ℝᵈ⁺¹ : |x| = ρ}` with the induced metric.
//! * `Hyperbolic(d, ρ)`: the upper sheet `{⟨x,x⟩_M = −ρ², x₀ > 0}` of the
//!   hyperboloid in Minkowski space, metric given by the Minkowski form
//!   `⟨u,v⟩_M = −u₀v₀ + Σ uₖvₖ` restricted to tangent spaces.
//!
//! The slice-level methods on [`GeometryBackend`] are the fast path used by
//! the dynamics. [`ManifoldPoint`] and [`TangentVector`] wrap them with
//! constraint and base-point checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angles closer than this to π are treated as antipodal on the sphere.
pub const ANTIPODAL_GUARD: f64 = 1e-8;
/// Tolerance for embedding and tangency constraints of checked values.
pub const CONSTRAINT_TOL: f64 = 1e-10;
const SERIES_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryBackend {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius: f64 },
    Hyperbolic { dim: usize, radius: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// sin(θ)/θ
fn sinc(theta: f64) -> f64 {
    if theta.abs() < SERIES_CUTOFF {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// sinh(θ)/θ
fn sinhc(theta: f64) -> f64 {
    if theta.abs() < SERIES_CUTOFF {
        1.0 + theta * theta / 6.0
    } else {
        theta.sinh() / theta
    }
}

impl GeometryBackend {
    pub fn euclidean(dim: usize) -> Self {
        GeometryBackend::Euclidean { dim }
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        GeometryBackend::Sphere { dim, radius }
    }

    pub fn hyperbolic(dim: usize, radius: f64) -> Self {
        GeometryBackend::Hyperbolic { dim, radius }
    }

    pub fn validate(&self) -> Result<()> {
        let (dim, radius) = match *self {
            GeometryBackend::Euclidean { dim } => (dim, 1.0),
            GeometryBackend::Sphere { dim, radius } | GeometryBackend::Hyperbolic { dim, radius } => (dim, radius),
        };
        if dim == 0 {
            return Err(Error::Param("manifold dimension must be at least 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Param(format!("manifold radius must be positive, got {radius}")));
        }
        Ok(())
    }

    /// Intrinsic dimension `d`.
    pub fn dim(&self) -> usize {
        match *self {
            GeometryBackend::Euclidean { dim }
            | GeometryBackend::Sphere { dim, .. }
            | GeometryBackend::Hyperbolic { dim, .. } => dim,
        }
    }

    /// Number of ambient coordinates per point.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            GeometryBackend::Euclidean { dim } => dim,
            GeometryBackend::Sphere { dim, .. } | GeometryBackend::Hyperbolic { dim, .. } => dim + 1,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match *self {
            GeometryBackend::Sphere { radius, .. } => PI * radius,
            GeometryBackend::Euclidean { .. } | GeometryBackend::Hyperbolic { .. } => f64::INFINITY,
        }
    }

    /// Metric `g_x(u, v)` for tangent vectors at `x`.
    pub fn inner(&self, _x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        match self {
            GeometryBackend::Hyperbolic { .. } => minkowski(u, v),
            _ => dot(u, v),
        }
    }

    pub fn norm(&self, x: &[f64], u: &[f64]) -> f64 {
        self.inner(x, u, u).max(0.0).sqrt()
    }

    /// Absolute violation of the embedding constraint at `p`.
    pub fn constraint_residual(&self, p: &[f64]) -> f64 {
        match *self {
            GeometryBackend::Euclidean { .. } => 0.0,
            GeometryBackend::Sphere { radius, .. } => (dot(p, p).sqrt() - radius).abs(),
            GeometryBackend::Hyperbolic { radius, .. } => {
                let q = -minkowski(p, p);
                if q <= 0.0 || p[0] <= 0.0 {
                    f64::INFINITY
                } else {
                    (q.sqrt() - radius).abs()
                }
            }
        }
    }

    /// Absolute violation of tangency of `u` at `x`, scaled by the radius.
    pub fn tangent_residual(&self, x: &[f64], u: &[f64]) -> f64 {
        match *self {
            GeometryBackend::Euclidean { .. } => 0.0,
            GeometryBackend::Sphere { radius, .. } => dot(x, u).abs() / radius,
            GeometryBackend::Hyperbolic { radius, .. } => minkowski(x, u).abs() / radius,
        }
    }

    /// Geodesic angle `θ = d(x,y)/ρ` and the component of `y − x` orthogonal
    /// to `x`, both computed from the chord `y − x` to avoid cancellation at
    /// small separations.
    fn angle_and_direction(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
        let chord = sub(y, x);
        match *self {
            GeometryBackend::Euclidean { .. } => (dot(&chord, &chord).sqrt(), chord),
            GeometryBackend::Sphere { radius, .. } => {
                let r2 = radius * radius;
                let q = dot(&chord, &chord);
                // y − ⟨x,y⟩/ρ² x, using ⟨x,y⟩ = ρ² − q/2
                let u: Vec<f64> = chord.iter().zip(x).map(|(c, xi)| c + q / (2.0 * r2) * xi).collect();
                let nu = dot(&u, &u).sqrt();
                let cos_part = radius - q / (2.0 * radius);
                (nu.atan2(cos_part), u)
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                let r2 = radius * radius;
                let q = minkowski(&chord, &chord).max(0.0);
                // y + ⟨x,y⟩_M/ρ² x, using ⟨x,y⟩_M = −ρ² − q/2
                let u: Vec<f64> = chord.iter().zip(x).map(|(c, xi)| c - q / (2.0 * r2) * xi).collect();
                (2.0 * (q.sqrt() / (2.0 * radius)).asinh(), u)
            }
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (theta, _) = self.angle_and_direction(x, y);
        match *self {
            GeometryBackend::Euclidean { .. } => Ok(theta),
            GeometryBackend::Sphere { radius, .. } => {
                if theta > PI - ANTIPODAL_GUARD {
                    return Err(Error::Antipodal { angle: theta });
                }
                Ok(radius * theta)
            }
            GeometryBackend::Hyperbolic { radius, .. } => Ok(radius * theta),
        }
    }

    /// Logarithm map `log_x y`, the initial velocity of the minimizing
    /// geodesic from `x` reaching `y` at time one.
    pub fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let (theta, u) = self.angle_and_direction(x, y);
        let radius = match *self {
            GeometryBackend::Euclidean { .. } => return Ok(u),
            GeometryBackend::Sphere { radius, .. } => {
                if theta > PI - ANTIPODAL_GUARD {
                    return Err(Error::Antipodal { angle: theta });
                }
                radius
            }
            GeometryBackend::Hyperbolic { radius, .. } => radius,
        };
        let nu = self.norm(x, &u);
        if nu == 0.0 {
            return Ok(vec![0.0; u.len()]);
        }
        let scale = radius * theta / nu;
        Ok(u.into_iter().map(|c| scale * c).collect())
    }

    /// Exponential map `exp_x u`.
    pub fn exp(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match *self {
            GeometryBackend::Euclidean { .. } => x.iter().zip(u).map(|(a, b)| a + b).collect(),
            GeometryBackend::Sphere { radius, .. } => {
                let theta = self.norm(x, u) / radius;
                let (c, s) = (theta.cos(), sinc(theta));
                let p: Vec<f64> = x.iter().zip(u).map(|(a, b)| c * a + s * b).collect();
                self.renormalize(p)
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                let theta = self.norm(x, u) / radius;
                let (c, s) = (theta.cosh(), sinhc(theta));
                let p: Vec<f64> = x.iter().zip(u).map(|(a, b)| c * a + s * b).collect();
                self.renormalize(p)
            }
        }
    }

    /// Parallel transport of `u ∈ T_x` along the minimizing geodesic to `y`.
    pub fn transport(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        match *self {
            GeometryBackend::Euclidean { .. } => Ok(u.to_vec()),
            GeometryBackend::Sphere { radius, .. } => {
                self.distance(x, y)?;
                // u − ⟨y,u⟩/(ρ² + ⟨x,y⟩) (x + y)
                let denom = radius * radius + dot(x, y);
                let k = dot(y, u) / denom;
                Ok(u.iter().zip(x.iter().zip(y)).map(|(ui, (xi, yi))| ui - k * (xi + yi)).collect())
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                // u + ⟨y,u⟩_M/(ρ² − ⟨x,y⟩_M) (x + y)
                let denom = radius * radius - minkowski(x, y);
                let k = minkowski(y, u) / denom;
                Ok(u.iter().zip(x.iter().zip(y)).map(|(ui, (xi, yi))| ui + k * (xi + yi)).collect())
            }
        }
    }

    fn renormalize(&self, p: Vec<f64>) -> Vec<f64> {
        match *self {
            GeometryBackend::Euclidean { .. } => p,
            GeometryBackend::Sphere { radius, .. } => {
                let s = radius / dot(&p, &p).sqrt();
                p.into_iter().map(|c| s * c).collect()
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                let s = radius / (-minkowski(&p, &p)).sqrt();
                p.into_iter().map(|c| s * c).collect()
            }
        }
    }

    /// Retraction of an ambient point onto the manifold by radial scaling.
    pub fn project_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let radius = match *self {
            GeometryBackend::Euclidean { .. } => return Ok(p.to_vec()),
            GeometryBackend::Sphere { radius, .. } | GeometryBackend::Hyperbolic { radius, .. } => radius,
        };
        let residual = self.constraint_residual(p);
        if !(residual < 0.1 * radius) {
            return Err(Error::Projection { residual });
        }
        Ok(self.renormalize(p.to_vec()))
    }

    /// Orthogonal (Minkowski-orthogonal for the hyperboloid) projection onto
    /// the tangent space at `x`.
    pub fn project_tangent(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match *self {
            GeometryBackend::Euclidean { .. } => u.to_vec(),
            GeometryBackend::Sphere { radius, .. } => {
                let k = dot(x, u) / (radius * radius);
                u.iter().zip(x).map(|(a, b)| a - k * b).collect()
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                let k = minkowski(x, u) / (radius * radius);
                u.iter().zip(x).map(|(a, b)| a + k * b).collect()
            }
        }
    }

    /// Normal part of the ambient derivative of a tangent field `w` carried
    /// along a curve through `x` with velocity `xdot`: the ambient derivative
    /// equals the covariant derivative plus this term.
    pub fn normal_acceleration(&self, x: &[f64], xdot: &[f64], w: &[f64]) -> Vec<f64> {
        match *self {
            GeometryBackend::Euclidean { .. } => vec![0.0; x.len()],
            GeometryBackend::Sphere { radius, .. } => {
                let k = -dot(xdot, w) / (radius * radius);
                x.iter().map(|a| k * a).collect()
            }
            GeometryBackend::Hyperbolic { radius, .. } => {
                let k = minkowski(xdot, w) / (radius * radius);
                x.iter().map(|a| k * a).collect()
            }
        }
    }

    fn check_ambient(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::Param(format!(
                "expected {} ambient coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        Ok(())
    }

    /// Checked point constructor: the constraint must hold to [`CONSTRAINT_TOL`].
    pub fn point(&self, coords: Vec<f64>) -> Result<ManifoldPoint> {
        self.check_ambient(&coords)?;
        let residual = self.constraint_residual(&coords);
        if !(residual <= CONSTRAINT_TOL) {
            return Err(Error::Projection { residual });
        }
        Ok(ManifoldPoint(coords))
    }

    /// Checked tangent constructor.
    pub fn tangent(&self, base: &ManifoldPoint, coords: Vec<f64>) -> Result<TangentVector> {
        self.check_ambient(&coords)?;
        let residual = self.tangent_residual(&base.0, &coords);
        if !(residual <= CONSTRAINT_TOL * (1.0 + self.norm(&base.0, &coords))) {
            return Err(Error::Projection { residual });
        }
        Ok(TangentVector { base: base.clone(), coords })
    }

    pub fn metric_inner(&self, x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        u.check_base(x)?;
        v.check_base(x)?;
        Ok(self.inner(&x.0, &u.coords, &v.coords))
    }

    pub fn geodesic_distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        self.distance(&x.0, &y.0)
    }

    pub fn exp_map(&self, x: &ManifoldPoint, u: &TangentVector) -> Result<ManifoldPoint> {
        u.check_base(x)?;
        Ok(ManifoldPoint(self.exp(&x.0, &u.coords)))
    }

    pub fn log_map(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        let coords = self.log(&x.0, &y.0)?;
        Ok(TangentVector { base: x.clone(), coords })
    }

    pub fn parallel_transport(&self, x: &ManifoldPoint, y: &ManifoldPoint, u: &TangentVector) -> Result<TangentVector> {
        u.check_base(x)?;
        let radius = self.injectivity_radius();
        let d = self.distance(&x.0, &y.0)?;
        if d >= radius {
            return Err(Error::Injectivity { distance: d, radius, pair: None });
        }
        let coords = self.transport(&x.0, &y.0, &u.coords)?;
        Ok(TangentVector { base: y.clone(), coords })
    }

    pub fn project_to_point(&self, p: &[f64]) -> Result<ManifoldPoint> {
        self.check_ambient(p)?;
        Ok(ManifoldPoint(self.project_point(p)?))
    }

    pub fn project_to_tangent(&self, x: &ManifoldPoint, u: &[f64]) -> Result<TangentVector> {
        self.check_ambient(u)?;
        Ok(TangentVector { base: x.clone(), coords: self.project_tangent(&x.0, u) })
    }
}

/// A point on a backend's manifold, in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint(pub(crate) Vec<f64>);

impl ManifoldPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn check_base(&self, x: &ManifoldPoint) -> Result<()> {
        let scale = 1.0 + x.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let same =
            self.base.0.len() == x.0.len() && self.base.0.iter().zip(&x.0).all(|(a, b)| (a - b).abs() <= 1e-12 * scale);
        if same {
            Ok(())
        } else {
            Err(Error::BaseMismatch)
        }
    }
}
