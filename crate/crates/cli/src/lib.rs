//! Experiment driver for the `qldp` binary: subcommand dispatch, flat config
//! files and report writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod svg;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "qldp", version, about = "Quantum local differential privacy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` file; `--key value` overrides follow it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal utility vs epsilon: utility_curve.csv and two SVG plots.
    UtilityCurve(Common),
    /// Numerical privacy certification of a channel.
    Certify(Common),
    /// Pauli-sampling estimator: sample bounds and Monte Carlo coverage.
    Estimate(Common),
    /// Private classical shadows: sample bound and Monte Carlo coverage.
    Shadows(Common),
    /// Per-sample communication cost of each protocol.
    CostReport(Common),
    /// Sample-complexity bounds over an (epsilon, beta) grid.
    Bounds(Common),
}

/// Runs one invocation and returns the process exit code: 0 success, 1
/// violated or failed coverage, 2 usage error, 3 out of regime.
pub fn run<I, S>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, env_seed, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common, env_seed: Option<&str>) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.apply_overrides(&common.overrides)?;
    if let Some(seed) = env_seed.filter(|s| !s.trim().is_empty()) {
        cfg.set_default("seed", seed.trim());
    }
    cfg.seed()?;
    Ok(cfg)
}

fn dispatch(cli: Cli, env_seed: Option<&str>, out: &mut dyn Write) -> Result<u8, CliError> {
    match &cli.command {
        Command::UtilityCurve(c) => commands::utility_curve(&load(c, env_seed)?, out),
        Command::Certify(c) => commands::certify(&load(c, env_seed)?, out),
        Command::Estimate(c) => commands::estimate(&load(c, env_seed)?, out),
        Command::Shadows(c) => commands::shadows(&load(c, env_seed)?, out),
        Command::CostReport(c) => commands::cost_report(&load(c, env_seed)?, out),
        Command::Bounds(c) => commands::bounds(&load(c, env_seed)?, out),
    }
}
