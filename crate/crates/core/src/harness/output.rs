use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, AdmissibilityReport, FlockingReport};
use crate::dynamics::SystemState;
use crate::error::{Error, Result};
use crate::integrate::{self, Termination, Trajectory};

use super::config::ScenarioSpec;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// C `printf("%.17g")`: 17 significant digits, shortest of fixed and
/// exponent notation, trailing zeros removed.
pub fn format_g17(v: f64) -> String {
    const P: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-4..P).contains(&exp) {
        if exp >= 0 {
            let split = (exp + 1) as usize;
            out.push_str(&digits[..split]);
            let frac = digits[split..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
            out.push_str(digits.trim_end_matches('0'));
        }
    } else {
        out.push_str(&digits[..1]);
        let frac = digits[1..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        let _ = write!(out, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    out
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Aborted(format!("{}: {e}", path.display()))
}

/// `t,particle,x0..x{m−1},w0..w{m−1}`, one row per particle per record.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let m = traj.states.first().map_or(0, |s| s.dim);
    let mut header = String::from("t,particle");
    for prefix in ["x", "w"] {
        for k in 0..m {
            let _ = write!(header, ",{prefix}{k}");
        }
    }
    writeln!(out, "{header}").map_err(|e| io_err(path, e))?;
    let mut line = String::new();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        for i in 0..s.n() {
            line.clear();
            let _ = write!(line, "{},{i}", format_g17(*t));
            for v in s.pos(i).iter().chain(s.mom(i)) {
                line.push(',');
                line.push_str(&format_g17(*v));
            }
            writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
        }
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Parse a trajectory CSV back into `(t, state)` records.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<SystemState>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Param("empty trajectory file".into()))?;
    let cols = header.split(',').count();
    if cols < 4 || (cols - 2) % 2 != 0 {
        return Err(Error::Param(format!("unexpected trajectory header {header:?}")));
    }
    let m = (cols - 2) / 2;
    let mut states: Vec<SystemState> = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Param(format!("malformed trajectory row {}", n + 2));
        if fields.len() != cols {
            return Err(bad());
        }
        let nums: Vec<f64> =
            fields.iter().map(|f| f.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let (t, particle) = (nums[0], nums[1] as usize);
        if particle == 0 {
            states.push(SystemState { t, dim: m, x: Vec::new(), w: Vec::new() });
        }
        let s = states.last_mut().ok_or_else(bad)?;
        if s.t != t || s.x.len() != particle * m {
            return Err(bad());
        }
        s.x.extend_from_slice(&nums[2..2 + m]);
        s.w.extend_from_slice(&nums[2 + m..]);
    }
    Ok(states)
}

/// One diagnostics line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub production: f64,
    pub max_rel_speed: f64,
    pub min_pair_dist: f64,
    pub max_pair_dist: f64,
    pub momentum_sum_norm: Option<f64>,
}

pub fn diagnostics_records(traj: &Trajectory) -> Vec<DiagnosticsRecord> {
    traj.times
        .iter()
        .zip(&traj.energy)
        .zip(&traj.flocking)
        .map(|((&t, e), f)| DiagnosticsRecord {
            t,
            kinetic: e.kinetic,
            potential: e.potential,
            total: e.total,
            production: e.production,
            max_rel_speed: f.max_rel_speed,
            min_pair_dist: f.min_pair_dist,
            max_pair_dist: f.max_pair_dist,
            momentum_sum_norm: f.momentum_sum_norm,
        })
        .collect()
}

pub fn write_diagnostics_jsonl(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for rec in diagnostics_records(traj) {
        let line = serde_json::to_string(&rec).map_err(|e| Error::Aborted(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: Termination,
    pub records: usize,
    pub t_final: f64,
    /// `None` when `kappa2 = 0`, for which the conditions are undefined.
    pub admissibility: Option<AdmissibilityReport>,
    pub final_flocking: FlockingReport,
    pub energy_identity_residual: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub trajectory_path: PathBuf,
    pub diagnostics_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
    pub trajectory: Trajectory,
}

/// Build, simulate and write `trajectory.csv`, `diagnostics.jsonl` and
/// `summary.json` into `out_dir`.
pub fn run_scenario(spec: &ScenarioSpec, out_dir: &Path) -> Result<RunArtifacts> {
    let built = spec.build()?;
    let b = built.backend.as_ref();
    let admissibility = if built.params.kappa2 > 0.0 {
        Some(diagnostics::admissibility(&built.state, &built.params, b)?)
    } else {
        None
    };
    let traj = integrate::simulate(&built.state, &built.params, &spec.stepper, b);
    let mut max_speed = 0.0_f64;
    for s in &traj.states {
        max_speed = max_speed.max(diagnostics::max_speed(s, built.params.c, b)?);
    }
    let summary = RunSummary {
        termination: traj.termination.clone(),
        records: traj.times.len(),
        t_final: *traj.times.last().expect("initial record"),
        admissibility,
        final_flocking: *traj.flocking.last().ok_or_else(|| Error::Aborted("no diagnostics recorded".into()))?,
        energy_identity_residual: diagnostics::energy_identity_residual(&traj),
        max_speed,
    };

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let trajectory_path = out_dir.join(TRAJECTORY_FILE);
    let diagnostics_path = out_dir.join(DIAGNOSTICS_FILE);
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_trajectory_csv(&trajectory_path, &traj)?;
    write_diagnostics_jsonl(&diagnostics_path, &traj)?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Aborted(e.to_string()))?;
    fs::write(&summary_path, json + "\n").map_err(|e| io_err(&summary_path, e))?;
    Ok(RunArtifacts { trajectory_path, diagnostics_path, summary_path, summary, trajectory: traj })
}
