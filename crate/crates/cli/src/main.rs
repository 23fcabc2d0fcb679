//! `bmv`: configuration-driven front end to the nanodiamond entanglement
//! simulator.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 configuration
//! error, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CliError, Context};
use crate::config::ConfigError;

#[derive(Debug, Parser)]
#[command(
    name = "bmv",
    version,
    about = "Simulate gravitationally entangled nanodiamond interferometers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for sweeps and scans (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<NonZeroUsize>,
    /// Suppress warnings on standard error.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Run the protocol once and estimate the witness.
    Run,
    /// Evaluate the protocol over the configured parameter grid.
    Sweep,
    /// Report Casimir gate, trap timing and the time needed for a target phase.
    Feasibility,
    /// Scan classical-mediator states for entanglement.
    Gwt,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or(ConfigError::NoConfig)?;
    let mut config = config::load(&path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.map_or(0, NonZeroUsize::get))
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))?;
    let ctx = Context {
        config,
        quiet: cli.quiet,
        pool,
    };
    match cli.command {
        Command::Run => commands::run(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Feasibility => commands::feasibility(&ctx),
        Command::Gwt => commands::gwt(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
