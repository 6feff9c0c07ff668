//! Command-line driver: one config file, one subcommand per study.

mod commands;
pub mod config;
pub mod output;

pub use config::{ConfigError, RunConfig};

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "gpbec", version, about = "Scattering, exact-diagonalization and Bogoliubov studies for dilute Bose gases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides `rng_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lattice scattering solution, φ norms and the three scattering lengths.
    Scattering,
    /// `a_N` against the continuum value over `gp.N_list`.
    Convergence,
    /// Sector ground states over `sector.n_min..=sector.n_max`.
    Ed,
    /// Trial-state energy against the exact sector energy.
    Trial,
    /// Commutator identity, `[𝒩₊, ℬ]` and the `𝒩₊` growth bound.
    Identity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scattering => "scattering",
            Command::Convergence => "convergence",
            Command::Ed => "ed",
            Command::Trial => "trial",
            Command::Identity => "identity",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

/// Loads the config, applies the flag overrides and runs the study.
pub fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("--config <path> is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    commands::run(cli.command, &config)
}

/// Runs and maps the outcome to the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(files) => {
            log::info!("wrote {}", files.join(", "));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
