//! `msqg`: command-line runner for coefficient tables, sampling, evolution,
//! expectation estimates and invariance experiments.
//!
//! Exit codes: 0 pass, 2 statistical test failure, 3 numerical failure,
//! 4 invalid configuration, 1 anything else (I/O).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use msqg::Formulation;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] msqg::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use msqg::Error as E;
        match self {
            CliError::Config(_) => 4,
            CliError::Core(E::NonConvergence { .. } | E::EnsembleInvalid { .. }) => 3,
            CliError::Core(E::InvalidParameter(_) | E::ZeroDelta | E::ZeroMode | E::SampleTooSmall { .. } | E::GridTooSmall { .. }) => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormulationArg {
    Regularized,
    Streamline,
}

#[derive(Debug, Parser)]
#[command(name = "msqg", version, about = "Galerkin experiments for the modified SQG family")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    formulation: Option<FormulationArg>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of alpha_{k,h} and alpha_{k,k-h} over a window.
    Coefficients,
    /// Gaussian draws: snapshots and a second-moment summary.
    Sample,
    /// One trajectory of the truncated flow with its drift report.
    Evolve,
    /// Inner lattice sums and the analytic versus Monte Carlo expectation.
    Expectation,
    /// Ensemble invariance test of the truncated measure.
    Invariance,
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(f) = cli.formulation {
        config.model.formulation = match f {
            FormulationArg::Regularized => Formulation::Regularized,
            FormulationArg::Streamline => Formulation::Streamline,
        };
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let config = effective_config(cli)?;
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(true);
    }
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Coefficients => commands::coefficients(&config),
        Command::Sample => commands::sample(&config),
        Command::Evolve => commands::evolve(&config),
        Command::Expectation => commands::expectation(&config),
        Command::Invariance => commands::invariance(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("statistical check failed; see the reports in the output directory");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
