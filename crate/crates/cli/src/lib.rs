//! Config-driven experiment runner for `bonabeau-core`.
//!
//! The `bonabeau` binary wraps [`run`]; everything it does is also reachable
//! from here so tests and the acceptance suite can drive commands without
//! spawning processes.

pub mod cells;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::Artifact;
pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bonabeau",
    version,
    about = "Dominance-hierarchy simulations and stability analysis"
)]
pub struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; without it the main result goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stability indicator of the egalitarian state per grid cell.
    Stability,
    /// Monte Carlo sweep of time-averaged sigma.
    Sweep,
    /// Competing-model runs to termination.
    Competing,
    /// Iterates the mean-field map.
    Meanfield,
    /// Oracle-based verification suites; exits with status 2 on failure.
    Verify,
    /// SVG plot of a sweep CSV.
    Plot {
        /// Sweep summary CSV (default: <out>/sweep.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Stability => "stability",
            Command::Sweep => "sweep",
            Command::Competing => "competing",
            Command::Meanfield => "meanfield",
            Command::Verify => "verify",
            Command::Plot { .. } => "plot",
        }
    }
}

/// Reads and validates a config file; relative paths inside it resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, path.parent())
}

fn config_for(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("`{}` needs --config PATH", cli.command.name())))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn emit(
    out: Option<&Path>,
    artifacts: &[Artifact],
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for a in artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.content).map_err(|e| CliError::io(&path, e))?;
            }
        }
        None => {
            if let Some(first) = artifacts.first() {
                stdout
                    .write_all(first.content.as_bytes())
                    .map_err(|e| CliError::io("<stdout>", e))?;
            }
        }
    }
    Ok(())
}

/// Executes one CLI invocation, writing results to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Stability => emit(
            out,
            &commands::stability_artifacts(&config_for(cli)?)?,
            stdout,
        ),
        Command::Sweep => emit(
            out,
            &commands::sweep_artifacts(&config_for(cli)?, cli.threads)?,
            stdout,
        ),
        Command::Competing => emit(
            out,
            &commands::competing_artifacts(&config_for(cli)?, cli.threads)?,
            stdout,
        ),
        Command::Meanfield => emit(
            out,
            &commands::meanfield_artifacts(&config_for(cli)?)?,
            stdout,
        ),
        Command::Verify => {
            let report = verify::cmd_verify(&config_for(cli)?)?;
            let artifact = Artifact {
                name: "verify.txt".into(),
                content: report.text.clone(),
            };
            emit(out, &[artifact], stdout)?;
            if report.passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .suites
                    .iter()
                    .filter(|s| s.failures > 0)
                    .map(|s| s.name)
                    .collect();
                Err(CliError::Verification(format!(
                    "failing suites: {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Plot { input } => {
            let axis = match &cli.config {
                Some(_) => config_for(cli)?.plot_x,
                None => config::Axis::Mu,
            };
            let path = match (input, out) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join("sweep.csv"),
                (None, None) => {
                    return Err(CliError::Config(
                        "`plot` needs --input PATH or --out DIR".into(),
                    ))
                }
            };
            let csv = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            emit(out, &commands::plot_artifacts(&csv, axis)?, stdout)
        }
    }
}
