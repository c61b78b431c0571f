//! `ofsv`: run spectral volume simulations, convergence studies, and the
//! built-in property checks.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

mod convergence;
mod output;
mod runcmd;
mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ofsv", about = "Spectral volume solvers for hyperbolic conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study over a list of mesh resolutions and emit a
    /// CSV table of errors and orders.
    Convergence {
        /// Path to a run configuration (JSON).
        config: PathBuf,
        /// Comma-separated SV counts, e.g. 8,16,32,64,128.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        meshes: Vec<usize>,
        /// Disable the damping term (plain SV scheme).
        #[arg(long)]
        no_damping: bool,
        /// Also write the CSV to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one simulation and write solution snapshots plus diagnostics.
    Run {
        /// Path to a run configuration (JSON).
        config: PathBuf,
        /// Comma-separated snapshot times (overrides the config).
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the built-in property suites and print a pass/fail report.
    Verify,
}

/// Driver-level error with the exit status it maps to.
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<ofsv_core::config::ConfigError> for CliError {
    fn from(e: ofsv_core::config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ofsv_core::solver::SolverError> for CliError {
    fn from(e: ofsv_core::solver::SolverError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    // OFSV_THREADS caps the rayon pool (rayon's own RAYON_NUM_THREADS also
    // works); errors here only mean the pool was already initialized.
    if let Ok(threads) = std::env::var("OFSV_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convergence {
            config,
            meshes,
            no_damping,
            output,
        } => convergence::command(&config, &meshes, no_damping, output.as_deref()),
        Command::Run {
            config,
            snapshots,
            out_dir,
        } => runcmd::command(&config, snapshots, out_dir.as_deref()),
        Command::Verify => verify::command(),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ofsv: {}", e.message());
            e.code()
        }
    }
}
