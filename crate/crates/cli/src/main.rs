//! `vsi`: simulate V2 spin-optical experiments, synthesise and fit datasets,
//! and plan GHZ/cluster-state photon sources.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd;
mod error;
mod svg;
mod units;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "vsi", version, about = "V2 silicon-vacancy spin-optical simulator, rate fitter and protocol planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one experiment and write its trace CSV.
    Simulate(cmd::simulate::SimulateArgs),
    /// Generate a noisy synthetic dataset directory with a fit manifest.
    Synth(cmd::synth::SynthArgs),
    /// Jointly fit all rates to the datasets listed in a manifest.
    Fit(cmd::fit::FitArgs),
    /// Fidelity budgets and Purcell requirements for GHZ/cluster states.
    Protocol(cmd::protocol::ProtocolArgs),
}

/// Model and calibration inputs shared by the simulation commands.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON (lifetimes in ns); the built-in reference rates when omitted.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Calibration JSON overriding the default pump constants.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VSI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("VSI_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("VSI_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = init_threads().and_then(|()| match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Fit(a) => cmd::fit::run(a),
        Command::Protocol(a) => cmd::protocol::run(a),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vsi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
