//! `mpalloc`: multi-period portfolio weights, Monte-Carlo simulation, and
//! strategy comparison from a JSON experiment manifest.
//!
//! Subcommands: `fit` (CSV -> model JSON), `weights` (one decision date),
//! `simulate` (one experiment cell), `compare` (the full horizon-by-gamma
//! grid plus summary tables), and `ecdf` (samples CSV -> distribution CSV).
//! Command-line flags override manifest values; all outputs are written via
//! temporary files and atomic renames so failures never leave partial files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;

#[derive(Parser)]
#[command(
    name = "mpalloc",
    version,
    about = "Multi-period portfolio weights, simulation, and strategy comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a first-order vector autoregression to a CSV of observations.
    Fit {
        /// Input CSV: one header row of series names, one row per time step.
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Output path for the fitted model JSON (parameters plus standard
        /// errors; the parameter fields double as an inline manifest model).
        #[arg(long, value_name = "JSON")]
        output: PathBuf,
        /// Tradable state coordinates (comma separated); defaults to all.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        asset_coords: Option<Vec<usize>>,
    },
    /// Print per-strategy portfolio weights for one decision date.
    Weights {
        /// Experiment manifest (must pin down one gamma and one horizon).
        #[arg(long, value_name = "JSON")]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Wealth at the decision date.
        #[arg(long, value_name = "W", default_value_t = 1.0)]
        wealth: f64,
        /// Decision date, 0-based from the start of the horizon.
        #[arg(long, value_name = "T", default_value_t = 0)]
        period: usize,
        /// State at the decision date (comma separated); defaults to the
        /// model's stationary mean.
        #[arg(
            long,
            value_name = "LIST",
            value_delimiter = ',',
            allow_hyphen_values = true
        )]
        state: Option<Vec<f64>>,
    },
    /// Run one Monte-Carlo experiment cell and write its report files.
    Simulate {
        /// Experiment manifest (must pin down one gamma and one horizon).
        #[arg(long, value_name = "JSON")]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the whole horizon-by-gamma grid and write comparison tables.
    Compare {
        /// Experiment manifest.
        #[arg(long, value_name = "JSON")]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Turn a per-repetition samples CSV into a distribution-function CSV.
    Ecdf {
        /// Input samples CSV (`repetition,utility`).
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Output CSV path (`value,cum_prob`).
        #[arg(long, value_name = "CSV")]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit {
            input,
            output,
            asset_coords,
        } => commands::fit(&input, &output, asset_coords),
        Command::Weights {
            config,
            overrides,
            wealth,
            period,
            state,
        } => commands::weights(&config, &overrides, wealth, period, state),
        Command::Simulate { config, overrides } => commands::simulate(&config, &overrides),
        Command::Compare { config, overrides } => commands::compare(&config, &overrides),
        Command::Ecdf { input, output } => commands::ecdf(&input, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
