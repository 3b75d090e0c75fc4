//! Command-line front end: `optimize`, `backtest`, `report`, `gen-data`.
//!
//! Exit codes are 0 on success, 1 when a pipeline or solver stage fails and 2
//! for unreadable inputs or invalid configuration.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or malformed input files.
    #[error("{0}")]
    Input(String),

    #[error("config: {0}")]
    Config(String),

    /// A pipeline, solver or backtest stage failed.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Input(_) | CliError::Config(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "annealfolio", version, about = "Annealed asset selection, Sharpe allocation and rebalancing backtests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select and weight a portfolio at the last date of the price file.
    Optimize(RunArgs),
    /// Run the periodic rebalancing backtest against a benchmark.
    Backtest(RunArgs),
    /// Render a result or backtest JSON as a text table.
    Report {
        /// Path to a JSON file written by `optimize` or `backtest`.
        path: PathBuf,
    },
    /// Regenerate the bundled synthetic dataset.
    GenData {
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        /// Overrides the generator's built-in seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Flags shared by `optimize` and `backtest`. Every flag overrides the
/// matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    /// `ticker,weight` CSV used as the benchmark allocation.
    #[arg(long, conflicts_with = "benchmark_ticker")]
    pub benchmark: Option<PathBuf>,
    /// Single ticker used as the benchmark.
    #[arg(long)]
    pub benchmark_ticker: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    /// `hybrid` or `fully_quantum`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "ANNEALFOLIO_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Positive integer or `auto`.
    #[arg(long)]
    pub cardinality: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Positive number or `auto`.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub period_months: Option<u32>,
    /// Backtest start date (YYYY-MM-DD).
    #[arg(long)]
    pub start: Option<String>,
    /// Any other config field as `dotted.key=value`, e.g. `pipeline.sampler.sweeps=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Optimize(a) => commands::cmd_optimize(&a),
        Command::Backtest(a) => commands::cmd_backtest(&a),
        Command::Report { path } => commands::cmd_report(&path),
        Command::GenData { out_dir, seed } => commands::cmd_gen_data(&out_dir, seed),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
