//! Relativistic Cucker–Smale flocking with bonding forces, on Euclidean
//! space and on the sphere and hyperbolic space.
//!
//! The crate is organised bottom-up:
//!
//! * [`relkin`]: velocity/momentum maps and kinetic energy.
//! * [`geometry`]: closed-form manifold backends.
//! * [`dynamics`]: right-hand sides of the particle system.
//! * [`integrate`]: fixed-step RK4/Euler with collision localisation.
//! * [`diagnostics`]: energies, production, bounds and condition checks.
//! * [`harness`]: scenario builders, config files and run output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod integrate;
pub mod relkin;

pub use dynamics::{KernelSpec, ModelParams, SystemState, TargetDistances};
pub use error::{Error, Result};
pub use geometry::{GeometryBackend, ManifoldPoint, TangentVector};
pub use integrate::{simulate, Scheme, StepperConfig, Termination, Trajectory};
pub use relkin::SpeedOfLight;
