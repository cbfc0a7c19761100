//! `mrt`: batch front-end for the magnetic Rayleigh–Taylor laboratory.
//!
//! Exit codes: 0 success, 1 failed scientific check, 2 usage or config
//! error, 3 numerical abort.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mrt",
    version,
    about = "Magnetic Rayleigh-Taylor numerical laboratory"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (1 disables data parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical field strength and its eigenfunction.
    Mc,
    /// Growth rate against wavenumber for a list of field strengths.
    Dispersion,
    /// Nonlinear run seeded by a linear mode.
    Simulate {
        /// Continue from a snapshot directory.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Parameter sweep of simulations.
    Study,
    /// Time-step and vertical-resolution convergence suite.
    Convergence,
}

fn configure_threads(jobs: Option<usize>) -> Result<(), CliError> {
    let Some(n) = jobs else {
        return Ok(());
    };
    if n == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    mrt_core::par::set_parallel(n > 1);
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    configure_threads(cli.jobs)?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let cfg = Config::load(path)?;
    let ctx = Ctx {
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Mc => commands::cmd_mc(&cfg, &ctx),
        Command::Dispersion => commands::cmd_dispersion(&cfg, &ctx),
        Command::Simulate { restart } => commands::cmd_simulate(&cfg, &ctx, restart.as_deref()),
        Command::Study => commands::cmd_study(&cfg, &ctx),
        Command::Convergence => commands::cmd_convergence(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mrt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
