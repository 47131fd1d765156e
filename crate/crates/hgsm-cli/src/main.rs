//! Experiment runner around the `hgsm` library.
//!
//! Exit codes: 0 on success, 1 when a `check` fails its assertion, 2 on
//! configuration or usage errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{CheckTag, Ctx};
use config::{ExperimentConfig, Mode, Overrides};

#[derive(Parser, Debug)]
#[command(name = "hgsm", version, about = "Sequence-space estimation experiments")]
struct Cli {
    /// JSON config file; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for all draws.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo loops; 0 uses the default pool.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Multiplier of the data-driven penalty.
    #[arg(long, global = true)]
    penalty_constant: Option<f64>,

    /// Estimator selection for risk studies.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,

    /// Replication count, overriding the config.
    #[arg(long, global = true)]
    trials: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit one simulated observation set as CSV.
    Simulate,
    /// Run the estimator once, at a fixed dimension or data-driven.
    Estimate {
        /// Truncation dimension; omit to use the configured mode.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Monte Carlo risk over the noise grid.
    McRisk,
    /// Fit the log-log rate over the noise grid and plot it.
    RateFit,
    /// Run one verification check; exits 1 on failure.
    Check {
        #[arg(value_enum)]
        tag: CheckTag,
    },
    /// Tabulate the benchmark quantities over the noise grid.
    OracleTable,
}

fn run(cli: Cli) -> Result<bool> {
    let over = Overrides {
        seed: cli.seed,
        out: cli.out.map(|p| p.to_string_lossy().into_owned()),
        penalty_constant: cli.penalty_constant,
        mode: cli.mode,
        trials: cli.trials,
    };
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &over)?;
    let ctx = Ctx::new(cfg, cli.workers);
    match cli.command {
        Command::Simulate => commands::run_simulate(&ctx)?,
        Command::Estimate { k } => commands::run_estimate(&ctx, k)?,
        Command::McRisk => commands::run_mc_risk(&ctx)?,
        Command::RateFit => commands::run_rate_fit(&ctx)?,
        Command::Check { tag } => return commands::run_check(&ctx, tag),
        Command::OracleTable => commands::run_oracle_table(&ctx)?,
    }
    Ok(true)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
