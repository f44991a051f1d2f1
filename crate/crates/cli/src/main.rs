//! `statmem` — exact and inferred memory analysis of stochastic processes.
//!
//! Each run is driven by one JSON configuration file; command-line flags
//! only override single fields, keeping experiments archivable. Every
//! subcommand is deterministic given its configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! non-convergence.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "statmem",
    version,
    about = "Statistical and quantum memory of stochastic processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (required by every subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Size of the worker thread pool (defaults to the CPU count).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a symbol sequence from a zoo process into a text file.
    Generate,
    /// Estimate quantum memory blindly from a sequence at each configured L.
    Infer,
    /// Compute C_μ, C_q, D_q, and memory-state overlaps of a zoo process.
    Exact,
    /// Profile the effective Markov order of a sequence.
    Emo,
    /// Run a full (L, N, trial) estimation sweep over a process.
    Sweep,
    /// Perturbation analysis: Weyl eigenvalue bounds or error-vs-N scaling.
    Perturb,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }

    let path = cli
        .config
        .ok_or_else(|| CliError::config("--config <path> is required"))?;
    let mut config = RunConfig::load(&path)?;
    if let Some(out) = cli.out {
        config.out = Some(out);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match cli.command {
        Command::Generate => commands::cmd_generate(&config),
        Command::Infer => commands::cmd_infer(&config),
        Command::Exact => commands::cmd_exact(&config),
        Command::Emo => commands::cmd_emo(&config),
        Command::Sweep => commands::cmd_sweep(&config),
        Command::Perturb => commands::cmd_perturb(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("statmem: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
