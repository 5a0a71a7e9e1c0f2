//! `dirac-lab` — reproducible experiments on 1D Dirac operators.
//!
//! Every subcommand is a pure function of one JSON config file (plus any
//! `--set` overrides): identical config and seed produce byte-identical
//! output files, so runs can be diffed, cached, and cited. Commands write
//! a single CSV or JSON file (see `docs/formats.md`) and print a one-line
//! summary to stdout.
//!
//! Exit codes: 0 success; 2 a configured tolerance or statistical check
//! failed (the output file is still written); 3 invalid config or input;
//! 4 a numerical guard tripped.

// `!(x > 0.0)` is used as a guard: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Environment variable consulted for the default worker-thread cap when
/// `--threads` is not given.
const THREADS_ENV: &str = "DIRAC_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "dirac-lab",
    version,
    about = "Reproducible numerical experiments on 1D Dirac operators",
    after_help = "Exit codes: 0 success, 2 tolerance violation, 3 invalid config, \
                  4 numerical guard tripped.\nOutput formats are documented in docs/formats.md."
)]
struct Cli {
    /// Path to the JSON experiment config (required by every subcommand).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config value by dotted path, e.g.
    /// `--set model.potential.seed=99` (repeatable; the value is parsed as
    /// JSON when possible, otherwise taken as a string).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Cap on worker threads (default: $DIRAC_LAB_THREADS, else all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Abel-averaged position moments by both routes over a geometric T
    /// grid (CSV; exits 2 when the routes disagree beyond tolerance).
    Moments,
    /// Windowed growth exponents fitted to a moments CSV (JSON, labeled
    /// indicative).
    Beta,
    /// Window-norm growth classification over an energy grid (CSV).
    TransferScan,
    /// Critical-energy scan with coupling windows and admissibility spot
    /// checks (JSON).
    Critical,
    /// Random-word failure-fraction experiment (CSV; exits 2 when the
    /// fraction trend rises with N).
    Bernoulli,
    /// Pairing admissibility of one compact state at one energy (JSON).
    Admissibility,
}

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: a configured tolerance or statistical check failed.
    Tolerance(String),
    /// Exit 3: unusable config, input file, or parameters.
    Config(String),
    /// Exit 4: a numerical safety guard tripped mid-computation.
    Numerical(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            CliError::Tolerance(m) | CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Tolerance(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<dirac_core::CoreError> for CliError {
    fn from(e: dirac_core::CoreError) -> Self {
        use dirac_core::CoreError::*;
        match e {
            NumericalGuard(_) | BoundaryContamination { .. } | EigenConvergence(_)
            | Indeterminate(_) => CliError::Numerical(e.to_string()),
            InvalidParam(_) | OutOfRange(_) | GridMismatch(_) | Io(_) | Parse(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.parse::<usize>().map_err(|_| {
                CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("thread cap must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<String, CliError> {
    init_threads(cli.threads)?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
    let cfg = config::load(path, &cli.set)?;
    match cli.command {
        Command::Moments => commands::moments(&cfg),
        Command::Beta => commands::beta(&cfg),
        Command::TransferScan => commands::transfer_scan(&cfg),
        Command::Critical => commands::critical(&cfg),
        Command::Bernoulli => commands::bernoulli(&cfg),
        Command::Admissibility => commands::admissibility(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dirac-lab: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
