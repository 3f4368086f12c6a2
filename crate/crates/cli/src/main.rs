//! `irdf`: solve, sweep, structure verification and oracle comparison for the
//! causal information rate-distortion function of Markov sources.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a run finishes but a
//! check fails (non-convergence, window mismatch, oracle disagreement).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "irdf",
    version,
    about = "Causal information rate-distortion solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threshold in nats below which a Markov chain is taken to hold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve independently at every s in the grid.
    Solve(Common),
    /// Trace the R(D) curve over the grid, warm-starting each point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Start every point from the uniform output law (points run in parallel).
        #[arg(long)]
        no_warm_start: bool,
    },
    /// Solve, then find the smallest Markov window at every interior step.
    VerifyStructure(Common),
    /// Compare the fixed point against the brute-force oracle.
    OracleCompare(Common),
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (common, warm) = match &cli.command {
        Command::Solve(c) | Command::VerifyStructure(c) | Command::OracleCompare(c) => (c, true),
        Command::Sweep {
            common,
            no_warm_start,
        } => (common, !no_warm_start),
    };
    let run = RunConfig::load(&common.config)?.validate(common.out.clone(), common.threshold)?;
    match cli.command {
        Command::Solve(_) => commands::solve(&run),
        Command::Sweep { .. } => commands::sweep_cmd(&run, warm),
        Command::VerifyStructure(_) => commands::verify_structure(&run),
        Command::OracleCompare(_) => commands::oracle_compare(&run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
