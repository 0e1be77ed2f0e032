//! `fracheat`: command-line front end for sideways heat reconstruction.
//!
//! ```text
//! fracheat <verify|forward|flux|reconstruct|holmgren> [--config FILE] [--key value]...
//! ```
//!
//! Settings come from a flat `key = value` file and are overridden by
//! `--key value` pairs. `FRACHEAT_THREADS` caps the worker pool (`0` runs
//! serially). Exit status is 0 on success, 1 when a computation fails or a
//! check does not pass, and 2 for usage or configuration errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Core(#[from] fracheat_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(fracheat_core::Error::InvalidArgument(_)) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Cmd {
    /// Run the built-in identity checks.
    Verify,
    /// Propagate a source temperature to a sensor, or sample a demo source.
    Forward,
    /// Recover the boundary flux from sensor data.
    Flux,
    /// Reconstruct the temperature between the sensor and the boundary.
    Reconstruct,
    /// Fit or assert a Holmgren class and report the convergence radius.
    Holmgren,
}

#[derive(Debug, Parser)]
#[command(
    name = "fracheat",
    version,
    about = "Sideways heat reconstruction via fractional derivatives"
)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Settings as `--key value` pairs.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--key value"
    )]
    settings: Vec<String>,
}

/// Pulls a `--config FILE` that landed among the trailing settings.
fn split_config(cli: &mut Cli) -> Result<(), CliError> {
    let mut rest = Vec::with_capacity(cli.settings.len());
    let mut it = std::mem::take(&mut cli.settings).into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::Usage("missing value for --config".into()))?;
            cli.config = Some(PathBuf::from(path));
        } else if let Some(path) = arg.strip_prefix("--config=") {
            cli.config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    cli.settings = rest;
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FRACHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("FRACHEAT_THREADS must be a count, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| CliError::Failure(format!("cannot size the worker pool: {e}")))
}

fn run(mut cli: Cli) -> Result<bool, CliError> {
    split_config(&mut cli)?;
    configure_threads()?;
    let allowed = commands::allowed_keys(cli.command);
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.settings, allowed)?;
    match cli.command {
        Cmd::Verify => commands::verify(&cfg),
        Cmd::Forward => commands::forward(&cfg),
        Cmd::Flux => commands::flux(&cfg),
        Cmd::Reconstruct => commands::reconstruct(&cfg),
        Cmd::Holmgren => commands::holmgren(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fracheat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
