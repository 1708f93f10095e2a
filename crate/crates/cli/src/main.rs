//! `otdepth`: Tukey depth, transport quantiles and breakdown experiments from the shell.
//!
//! Exit codes: 0 success (and, for experiments, every estimate within its
//! bracket), 1 bracket violation, 2 input error.

mod commands;
mod config;
mod output;
mod repro;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "otdepth", version, about = "Transport-based quantiles, Tukey depth and breakdown experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tukey depth and lower Tukey depth of a query point or every cloud point.
    Depth(commands::DepthArgs),
    /// Optimal matching, transport depths, contours and median.
    Transport(commands::TransportArgs),
    /// Breakdown-point estimate from a config.
    Breakdown(commands::BreakdownArgs),
    /// Regenerate a worked example or the randomized bracket sweep.
    Repro(repro::ReproArgs),
    /// Write a reference cloud as CSV.
    Generate(commands::GenerateArgs),
}

pub enum Status {
    Ok,
    BracketViolation,
}

/// Caps the rayon pool at `OTDEPTH_THREADS` when set.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OTDEPTH_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("OTDEPTH_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    configure_threads()?;
    match cli.command {
        Command::Depth(a) => commands::depth(a),
        Command::Transport(a) => commands::transport(a),
        Command::Breakdown(a) => commands::breakdown(a),
        Command::Repro(a) => repro::repro(a),
        Command::Generate(a) => commands::generate_cmd(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::BracketViolation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
