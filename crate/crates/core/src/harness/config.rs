use serde::{Deserialize, Serialize};

use crate::dynamics::{KernelSpec, ModelParams, SystemState, TargetDistances};
use crate::error::{Error, Result};
use crate::geometry::GeometryBackend;
use crate::integrate::StepperConfig;
use crate::relkin::SpeedOfLight;

use super::builders;

/// A complete, reproducible run description. Serialises to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub stepper: StepperConfig,
    pub scenario: ScenarioKind,
}

/// Model parameters; `targets` may be left out when the scenario derives
/// them (pattern, collision example) or uses a uniform target distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub c: SpeedOfLight,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetDistances>,
}

impl ModelConfig {
    pub fn params(&self, targets: TargetDistances) -> ModelParams {
        ModelParams {
            c: self.c,
            kappa0: self.kappa0,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            targets: self.targets.clone().unwrap_or(targets),
            kernel: self.kernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Targets are the pair distances of `points`; particles start at the
    /// points displaced by uniform noise, with random velocities of at most
    /// `initial_speed`.
    Pattern { points: Vec<Vec<f64>>, position_noise: f64, initial_speed: f64 },
    /// Two particles on a line with target distance `r`; requires `c = inf`.
    CollisionExample { r: f64, x0: [f64; 2], v0: [f64; 2] },
    /// `n` particles uniformly in `[0, box_size]^dim`, momenta uniform in the
    /// ball of radius `speed` and recentred to zero sum.
    Flocking { n: usize, dim: usize, box_size: f64, speed: f64, target: f64 },
    /// Nonrelativistic-limit sweep of `base` over the listed speeds of light.
    LimitSweep { cs: Vec<f64>, base: Box<ScenarioKind> },
    /// Particles clustered around a base point of a curved backend, or
    /// explicit `positions`/`momenta` in ambient coordinates.
    Manifold {
        backend: GeometryBackend,
        n: usize,
        spread: f64,
        speed: f64,
        target: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positions: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        momenta: Option<Vec<Vec<f64>>>,
    },
}

/// Everything needed to call [`crate::integrate::simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltScenario {
    pub state: SystemState,
    pub params: ModelParams,
    pub backend: Option<GeometryBackend>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Param(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Param(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Param(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.stepper.validate()?;
        validate_kind(&self.scenario)
    }

    /// Construct the initial state and parameters. Sweeps build their base
    /// scenario at the configured `c`.
    pub fn build(&self) -> Result<BuiltScenario> {
        self.validate()?;
        build_kind(&self.scenario, &self.model, self.seed)
    }
}

fn validate_kind(kind: &ScenarioKind) -> Result<()> {
    match kind {
        ScenarioKind::LimitSweep { cs, base } => {
            if matches!(**base, ScenarioKind::LimitSweep { .. }) {
                return Err(Error::Param("limit sweeps cannot be nested".into()));
            }
            if cs.iter().any(|c| !(*c > 0.0)) {
                return Err(Error::Param("sweep speeds of light must be positive".into()));
            }
            if cs.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Param("sweep speeds of light must be strictly increasing".into()));
            }
            validate_kind(base)
        }
        ScenarioKind::Pattern { position_noise, initial_speed, .. } => {
            if !(*position_noise >= 0.0 && *initial_speed >= 0.0) {
                return Err(Error::Param("noise and speed must be non-negative".into()));
            }
            Ok(())
        }
        ScenarioKind::Flocking { n, dim, box_size, speed, target } => {
            if *n < 2 || *dim == 0 {
                return Err(Error::Param("flocking needs n >= 2 and dim >= 1".into()));
            }
            if !(*box_size > 0.0 && *speed >= 0.0 && *target > 0.0) {
                return Err(Error::Param("box_size and target must be positive, speed non-negative".into()));
            }
            Ok(())
        }
        ScenarioKind::Manifold { backend, n, .. } => {
            backend.validate()?;
            if *n == 0 {
                return Err(Error::Param("manifold scenario needs at least one particle".into()));
            }
            Ok(())
        }
        ScenarioKind::CollisionExample { .. } => Ok(()),
    }
}

fn build_kind(kind: &ScenarioKind, model: &ModelConfig, seed: u64) -> Result<BuiltScenario> {
    let built = match kind {
        ScenarioKind::Pattern { points, position_noise, initial_speed } => {
            let targets = builders::build_pattern_targets(points)?;
            let params = model.params(targets);
            let state = builders::pattern_state(points, *position_noise, *initial_speed, params.c, seed)?;
            BuiltScenario { state, params, backend: None }
        }
        ScenarioKind::CollisionExample { r, x0, v0 } => {
            let kappas = (model.kappa0, model.kappa1, model.kappa2);
            let (built, _) = builders::build_collision_example_with(*r, *x0, *v0, kappas, model.kernel)?;
            if !model.c.is_infinite() {
                return Err(Error::Param("the collision example uses the classical model (c = \"inf\")".into()));
            }
            built
        }
        ScenarioKind::Flocking { n, dim, box_size, speed, target } => {
            let params = model.params(TargetDistances::uniform(*n, *target)?);
            let state = builders::flocking_state(*n, *dim, *box_size, *speed, seed)?;
            BuiltScenario { state, params, backend: None }
        }
        ScenarioKind::LimitSweep { base, .. } => build_kind(base, model, seed)?,
        ScenarioKind::Manifold { backend, n, spread, speed, target, positions, momenta } => {
            let params = model.params(TargetDistances::uniform(*n, *target)?);
            let state = match (positions, momenta) {
                (Some(x), Some(w)) => SystemState::new(0.0, x, w)?,
                (None, None) => builders::manifold_state(backend, *n, *spread, *speed, seed)?,
                _ => return Err(Error::Param("give both positions and momenta, or neither".into())),
            };
            BuiltScenario { state, params, backend: Some(*backend) }
        }
    };
    built.params.validate()?;
    if built.params.n() != built.state.n() {
        return Err(Error::Param(format!(
            "targets are {}x{} but the scenario has {} particles",
            built.params.n(),
            built.params.n(),
            built.state.n()
        )));
    }
    if let Some(b) = &built.backend {
        check_on_manifold(b, &built.state)?;
    }
    Ok(built)
}

fn check_on_manifold(b: &GeometryBackend, s: &SystemState) -> Result<()> {
    if s.dim != b.ambient_dim() {
        return Err(Error::Param(format!("backend needs {} ambient coordinates, got {}", b.ambient_dim(), s.dim)));
    }
    for i in 0..s.n() {
        let x = b.point(s.pos(i).to_vec())?;
        b.tangent(&x, s.mom(i).to_vec())?;
    }
    Ok(())
}

impl ScenarioKind {
    /// Speeds of light of a sweep, `None` for other kinds.
    pub fn sweep_speeds(&self) -> Option<&[f64]> {
        match self {
            ScenarioKind::LimitSweep { cs, .. } => Some(cs),
            _ => None,
        }
    }
}
