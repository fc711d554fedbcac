//! `redstress`: batch front end of the stress-testing engine.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Overrides, RunConfig};

/// Fatal errors. Anything else is reported per cell inside the output.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Ingest(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn from_csv(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "redstress", version, about = "Liability liquidity stress testing of fund redemptions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Flow-record CSV (overrides [input] flows).
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Simulation seed (overrides [simulation] seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Confidence level of ℚ and ℂ (overrides [measures] alpha).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Report format (overrides [output] format).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Historical risk measures per category cell.
    Stats,
    /// Zero-inflated frequency/severity fits per cell.
    FitZi,
    /// Individual-based model calibration per cell.
    FitIm,
    /// Copula parameter calibration per cell.
    FitCopula,
    /// Parametric stress scenarios over the return-time grid.
    Stress,
    /// Monte Carlo simulation of the configured model.
    Simulate,
    /// Explanatory regressions of redemption rates.
    Factors,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::FitZi => "fit-zi",
            Command::FitIm => "fit-im",
            Command::FitCopula => "fit-copula",
            Command::Stress => "stress",
            Command::Simulate => "simulate",
            Command::Factors => "factors",
        }
    }
}

/// Caps rayon's pool at `REDSTRESS_THREADS` when set.
fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("REDSTRESS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("REDSTRESS_THREADS must be a positive integer (got '{v}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let c = cli.common;
    let overrides = Overrides { input: c.input, out: c.out, seed: c.seed, alpha: c.alpha, format: c.format };
    let cfg = RunConfig::load(c.config.as_deref(), &overrides)?;
    let tables = match cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::FitZi => commands::fit_zi(&cfg),
        Command::FitIm => commands::fit_im(&cfg),
        Command::FitCopula => commands::fit_copula(&cfg),
        Command::Stress => commands::stress(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Factors => commands::factors(&cfg),
    }?;
    for t in &tables {
        let path = t.write(&cfg.output.dir, cli.command.name(), cfg.output.format)?;
        eprintln!("wrote {} ({} rows)", path.display(), t.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
