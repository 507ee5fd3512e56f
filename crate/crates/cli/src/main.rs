//! `dfl`: simulate data, fit and compare dynamic regression models, forecast,
//! and tabulate prior densities.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, flags or input data (exit 2).
    Config(String),
    /// A numerical routine failed (exit 3).
    Numerical(String),
    /// Output could not be written (exit 1).
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<dfl_core::Error> for CliError {
    fn from(e: dfl_core::Error) -> Self {
        let mut root = &e;
        while let dfl_core::Error::Sweep { source, .. } = root {
            root = source;
        }
        match root {
            dfl_core::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "dfl", version, about = "Dynamic fused LASSO regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from the study's data-generating process.
    #[command(after_help = config::simulate_help())]
    Simulate(Common),
    /// Run the Gibbs sampler on a dataset and summarize the posterior.
    #[command(after_help = config::fit_help())]
    Fit(Common),
    /// Sequential one-step-ahead forecasts with a refit at every origin.
    #[command(after_help = config::forecast_help())]
    Forecast(Common),
    /// Score a posterior summary (and optional forecasts) against the truth.
    #[command(after_help = config::evaluate_help())]
    Evaluate(Common),
    /// Simulate once, then fit, forecast and score several models.
    #[command(after_help = config::compare_help())]
    Compare(Common),
    /// Tabulate prior densities and shrinkage quantities on grids.
    #[command(after_help = config::density_help())]
    Density(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Simulate(c)
    | Command::Fit(c)
    | Command::Forecast(c)
    | Command::Evaluate(c)
    | Command::Compare(c)
    | Command::Density(c)) = &cli.command;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&c.out).map_err(|e| CliError::Io(format!("{}: {e}", c.out.display())))?;
    let cfg = c.config.as_deref();
    let seed = c.seed.unwrap_or(0);
    match &cli.command {
        Command::Simulate(_) => commands::simulate(config::load(cfg)?, c.seed, &c.out),
        Command::Fit(_) => commands::fit(config::load(cfg)?, seed, &c.out),
        Command::Forecast(_) => commands::forecast(config::load(cfg)?, seed, &c.out),
        Command::Evaluate(_) => commands::evaluate(config::load(cfg)?, &c.out),
        Command::Compare(_) => commands::compare(config::load(cfg)?, seed, &c.out),
        Command::Density(_) => commands::density(config::load(cfg)?, &c.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
