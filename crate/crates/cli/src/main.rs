//! Spur gear vibration simulator command line.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! failure, 4 I/O error.

mod commands;
mod config;
mod io;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "gearsim",
    version,
    about = "Spur gear pair vibration simulator: signal generation, processing, and simulation enhancement",
    term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one vibration signal from a preset or configuration file.
    Simulate(commands::simulate::SimulateArgs),
    /// Generate an ensemble of runs sharing one profile-error field.
    Batch(commands::batch::BatchArgs),
    /// Extract condition indicators and difference signals from recorded runs.
    Features(commands::features::FeaturesArgs),
    /// Grid-search the enhancement parameters against measured data.
    Enhance(commands::enhance::EnhanceArgs),
    /// Benchmark the naive vs optimized numerical kernels.
    Bench(commands::bench::BenchArgs),
}

/// Marker for failures that should exit with the numerical-failure code.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::error::Error for NumericalFailure {}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    use gearsim_core::Error as E;
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::NonConvergence { .. }
                | E::Divergence { .. }
                | E::SingularMatrix { .. }
                | E::SingularSection { .. }
                | E::NoContactInCycle { .. } => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<NumericalFailure>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    2
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Batch(args) => commands::batch::run(args),
        Command::Features(args) => commands::features::run(args),
        Command::Enhance(args) => commands::enhance::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code_for(&err));
    }
}
