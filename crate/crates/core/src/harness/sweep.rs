use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DeviationSeries};
use crate::dynamics::{ModelParams, SystemState};
use crate::error::{Error, Result};
use crate::integrate::{self, StepperConfig, Termination, Trajectory};
use crate::relkin::SpeedOfLight;

use super::config::{ModelConfig, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cs: Vec<f64>,
    pub sup_d: Vec<f64>,
    /// Least-squares slope of `ln sup_D` against `ln c`; `None` when some
    /// `sup_D` is zero.
    pub slope: Option<f64>,
    pub strictly_decreasing: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x[..n].iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn completed(traj: Trajectory, c: SpeedOfLight) -> Result<Trajectory> {
    match &traj.termination {
        Termination::Completed => Ok(traj),
        other => Err(Error::Aborted(format!("run with c = {c} ended early: {other:?}"))),
    }
}

/// Deviation series of each `cs[k]` run from a run with `reference`, all
/// from the same initial positions and momenta. Runs go one per thread.
pub fn sweep_deviations(
    s0: &SystemState,
    params: &ModelParams,
    cfg: &StepperConfig,
    reference: SpeedOfLight,
    cs: &[SpeedOfLight],
) -> Result<Vec<DeviationSeries>> {
    let run = |c: SpeedOfLight| completed(integrate::simulate(s0, &params.with_c(c), cfg, None), c);
    let (base, runs) = std::thread::scope(|scope| {
        let handles: Vec<_> = cs.iter().map(|&c| scope.spawn(move || run(c))).collect();
        let base = run(reference);
        let runs: Vec<Result<Trajectory>> =
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect();
        (base, runs)
    });
    let base = base?;
    runs.into_iter().map(|r| diagnostics::deviation(&r?, &base)).collect()
}

/// Nonrelativistic-limit sweep of a flat-space scenario. The initial
/// momenta are built once with `c = ∞` and shared by every run; the energy
/// condition that makes the limit uniform is required at the smallest `c`.
pub fn run_limit_sweep(spec: &ScenarioSpec, cs: &[f64], t_end: Option<f64>) -> Result<SweepResult> {
    if cs.len() < 3 {
        return Err(Error::Param(format!("a limit sweep needs at least three values of c, got {}", cs.len())));
    }
    if cs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Param("sweep values of c must be strictly increasing".into()));
    }
    let speeds: Vec<SpeedOfLight> = cs.iter().map(|&c| SpeedOfLight::finite(c)).collect::<Result<_>>()?;
    let classical =
        ScenarioSpec { model: ModelConfig { c: SpeedOfLight::Infinite, ..spec.model.clone() }, ..spec.clone() };
    let built = classical.build()?;
    if built.backend.is_some_and(|b| !matches!(b, crate::geometry::GeometryBackend::Euclidean { .. })) {
        return Err(Error::Param("limit sweeps run in flat space only".into()));
    }
    if !diagnostics::check_uniform_energy_condition(&built.state, &built.params, speeds[0])? {
        return Err(Error::Condition {
            clause: "uniform energy".into(),
            detail: format!("initial energy too large for a uniform limit from c = {}", cs[0]),
        });
    }
    let mut cfg = spec.stepper;
    if let Some(t) = t_end {
        cfg.t_end = t;
    }
    let series = sweep_deviations(&built.state, &built.params, &cfg, SpeedOfLight::Infinite, &speeds)?;
    let sup_d: Vec<f64> = series.iter().map(|s| s.sup_d).collect();
    let slope = if sup_d.iter().all(|&d| d > 0.0) {
        let lx: Vec<f64> = cs.iter().map(|c| c.ln()).collect();
        let ly: Vec<f64> = sup_d.iter().map(|d| d.ln()).collect();
        least_squares_slope(&lx, &ly)
    } else {
        None
    };
    let strictly_decreasing = sup_d.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepResult { cs: cs.to_vec(), sup_d, slope, strictly_decreasing })
}
