//! `dcosp`: generate scenario suites, benchmark solvers against the oracle,
//! and replay or audit persisted runs.

mod bench;
mod check;
mod config_args;
mod error;
mod generate;
mod merge;

use clap::{Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "dcosp", version, about = "Dynamic constellation observation scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded scenario suite and its effective config.
    Generate {
        #[command(flatten)]
        config: config_args::ConfigArgs,
        /// Directory for the scenario files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every selected solver on every scenario and tabulate against the oracle.
    Bench {
        #[command(flatten)]
        config: config_args::ConfigArgs,
        /// Directory for run records, traces and tables.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; zero uses one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Succeed even when the exact oracle exhausts its budget.
        #[arg(long)]
        allow_unproven: bool,
        /// Scenario files written by `generate`.
        #[arg(required = true, value_name = "SCENARIO")]
        files: Vec<PathBuf>,
    },
    /// Rerun persisted runs and compare them with the records.
    Replay {
        /// Use this scenario file instead of the one named in the record.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Check persisted runs against the scheduling and accounting invariants.
    Verify {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out } => generate::generate(&config.resolve()?, &out),
        Command::Bench { config, out, workers, allow_unproven, files } => {
            let opts = bench::BenchOptions { out, workers, allow_unproven };
            bench::bench(&config.resolve()?, &files, &opts)
        }
        Command::Replay { scenario, workers, runs } => check::replay(&runs, scenario.as_deref(), workers),
        Command::Verify { scenario, runs } => check::verify(&runs, scenario.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
