//! `popsim`: equilibrium posting, polarization thresholds, welfare sweeps,
//! and oracle verification for the strategic-expression model, driven by
//! TOML scenario configs.
//!
//! Exit codes: 0 success, 1 runtime/IO error (including oracle mismatches),
//! 2 config or validation error, 3 regime error (e.g. the knife-edge
//! society the closed forms decline to classify).

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::ConfigFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Runtime(_) => 1,
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Regime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "popsim",
    version,
    about = "Equilibrium posting, polarization, and welfare for a strategic-expression model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario/run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the command's CSV here (overrides the config's `out`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and enumeration; falls back to the
    /// POPSIM_THREADS environment variable, then to the number of cores.
    /// Output bytes do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Assign the remainder of an odd indifferent group to the lower
    /// opinion value instead of failing (the model itself assumes even
    /// groups).
    #[arg(long, global = true)]
    allow_odd_split: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the equilibrium posting profile and platform group sizes.
    Equilibrium,
    /// Evaluate every closed-form threshold and classify the scenario.
    Thresholds,
    /// Sweep one parameter axis and emit the welfare CSV.
    Sweep,
    /// Sweep group sizes and visibility caps under both platform
    /// algorithms.
    Algorithms,
    /// Cross-check the engine against brute-force equilibrium enumeration.
    Verify,
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("POPSIM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config = ConfigFile::load(config_path)?;
    match cli.command {
        Command::Equilibrium => {
            commands::cmd_equilibrium(&config, cli.out.as_ref(), cli.allow_odd_split)
        }
        Command::Thresholds => commands::cmd_thresholds(&config, cli.out.as_ref()),
        Command::Sweep => commands::cmd_sweep(&config, cli.out.as_ref()),
        Command::Algorithms => commands::cmd_algorithms(&config, cli.out.as_ref()),
        Command::Verify => commands::cmd_verify(&config, cli.out.as_ref()),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match thread_count(cli.threads) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
