//! Command-line front end for the psfm toolkit: data synthesis, tuning,
//! forecasting, ensembling, and report generation as reproducible runs.
//!
//! Exit codes: 0 on success, 1 for data problems, 2 for configuration
//! problems, 3 for runtime failures such as ensembles that cannot finish.

mod config;
mod run;

use clap::{Parser, Subcommand};
use psfm::error::Error;

#[derive(Parser)]
#[command(name = "psfm", version, about = "Pattern-similarity forecasting for monthly series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic monthly demand series
    Synth(run::SynthArgs),
    /// Forecast each series with one named model
    Forecast(run::ForecastArgs),
    /// Grid-search one model family per series
    Tune(run::TuneArgs),
    /// Score forecast files against their actuals
    Evaluate(run::EvaluateArgs),
    /// Average per-series metric ranks into a leaderboard
    Rank(run::RankArgs),
    /// Run the full model zoo and write report tables
    Benchmark(run::BenchmarkArgs),
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Parse { .. }
        | Error::Gap { .. }
        | Error::Domain(_)
        | Error::DegenerateSequence(_)
        | Error::InsufficientData(_)
        | Error::Io(_)
        | Error::Csv(_) => 1,
        Error::Config(_) | Error::Shape { .. } => 2,
        Error::Underflow(_)
        | Error::Member(_)
        | Error::Ensemble(_)
        | Error::Tuning(_)
        | Error::IncompleteTable { .. } => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => run::synth(args),
        Command::Forecast(args) => run::forecast(args),
        Command::Tune(args) => run::tune(args),
        Command::Evaluate(args) => run::evaluate(args),
        Command::Rank(args) => run::rank(args),
        Command::Benchmark(args) => run::benchmark(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
