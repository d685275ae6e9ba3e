use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the model, geometry and diagnostics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("speed {speed} is not below the speed of light {c}")]
    Domain { speed: f64, c: f64 },

    #[error("momentum inversion did not converge for |w| = {momentum}")]
    Convergence { momentum: f64 },

    #[error("tangent vector is not based at the given point")]
    BaseMismatch,

    #[error("points are (nearly) antipodal: angle {angle}")]
    Antipodal { angle: f64 },

    #[error("geodesic distance {distance} reaches the injectivity radius {radius}{}", fmt_pair(.pair))]
    Injectivity { distance: f64, radius: f64, pair: Option<(usize, usize)> },

    #[error("point lies too far from the manifold (constraint residual {residual})")]
    Projection { residual: f64 },

    #[error("particles {i} and {j} collided (distance {distance})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("invalid parameters: {0}")]
    Param(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("condition {clause} violated: {detail}")]
    Condition { clause: String, detail: String },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("run aborted: {0}")]
    Aborted(String),
}

fn fmt_pair(pair: &Option<(usize, usize)>) -> String {
    match pair {
        Some((i, j)) => format!(" for particles {i} and {j}"),
        None => String::new(),
    }
}
