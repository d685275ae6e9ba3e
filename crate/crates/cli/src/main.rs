use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use relflock::diagnostics;
use relflock::harness::{self, ScenarioSpec};

#[derive(Parser)]
#[command(name = "relflock", version, about = "Relativistic Cucker-Smale flocking with bonding forces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file and write its outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the admissibility report of a scenario's initial state.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Nonrelativistic-limit sweep over the speed of light.
    SweepC {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated speeds of light; defaults to the config's sweep list.
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
        /// Override the stepper's end time.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the built-in scenarios.
    Scenario {
        name: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Pattern,
    Collision,
    Flocking,
    Sphere,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Pattern => "pattern",
            Preset::Collision => "collision",
            Preset::Flocking => "flocking",
            Preset::Sphere => "sphere",
        }
    }
}

fn load(path: &Path) -> Result<ScenarioSpec> {
    Ok(ScenarioSpec::load(path)?)
}

fn simulate(spec: &ScenarioSpec, out: &Path) -> Result<()> {
    let run = harness::run_scenario(spec, out)?;
    println!("{}", serde_json::to_string_pretty(&run.summary)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out } => simulate(&load(&config)?, &out),
        Command::Check { config } => {
            let spec = load(&config)?;
            let built = spec.build()?;
            let report = diagnostics::admissibility(&built.state, &built.params, built.backend.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::SweepC { config, c, t_end, out } => {
            let spec = load(&config)?;
            let cs = if c.is_empty() {
                match spec.scenario.sweep_speeds() {
                    Some(cs) => cs.to_vec(),
                    None => bail!("no --c values given and the config is not a limit sweep"),
                }
            } else {
                c
            };
            let result = harness::run_limit_sweep(&spec, &cs, t_end)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let json = serde_json::to_string_pretty(&result)?;
            fs::write(out.join("sweep.json"), format!("{json}\n")).context("writing sweep.json")?;
            println!("{json}");
            Ok(())
        }
        Command::Scenario { name, seed, out } => {
            let spec = harness::preset(name.name(), seed)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            fs::write(out.join("config.toml"), spec.to_toml()?).context("writing config.toml")?;
            simulate(&spec, &out)
        }
    }
}
