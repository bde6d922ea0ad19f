//! Experiment orchestrator for the spectral-tail laboratory.
//!
//! Subcommands: `rate` (rate-function curves and transition ladder),
//! `sample` (one network draw, optionally planted or decomposed), `verify`
//! (exact identities on a stored graph), `tails` (tail-probability
//! estimates over an `n` grid with exponent fits), and `structure`
//! (conditioned ensembles and localization reports).
//!
//! Every run writes `manifest.json`, `records.jsonl`, and `summary.csv`
//! under `--out`. Flags may be defaulted from a `key = value` config file
//! (`--config`), with flag > file > default per field; `SPECTAIL_THREADS`
//! sets the default worker-thread count. Exit codes: 0 on success, 1 on
//! usage or configuration errors (always before any sampling), 2 when a
//! verified invariant fails.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{FileConfig, Resolver};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

/// Failures split by exit code: usage and configuration problems exit 1,
/// violated invariants exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        CliError::Invariant(msg.into())
    }
}

/// Shorthand for mapping library errors onto usage errors.
pub fn usage_err<E: fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "spectail",
    version,
    about = "Laboratory for extreme-eigenvalue tails of sparse Gaussian networks"
)]
struct Cli {
    /// Key = value configuration file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: SPECTAIL_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the upper-tail rate function and its transition ladder.
    Rate(RateArgs),
    /// Draw one network, optionally planted or split at a weight threshold.
    Sample(SampleArgs),
    /// Check an exact identity on a stored graph.
    Verify(VerifyArgs),
    /// Estimate tail probabilities over an n grid and fit exponents.
    Tails(TailsArgs),
    /// Draw a conditioned ensemble and report clique and eigenvector
    /// structure.
    Structure(StructureArgs),
}

#[derive(Args)]
struct RateArgs {
    /// Single excess parameter to evaluate.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Inclusive evaluation grid start:stop:step, e.g. 0:30:0.1.
    #[arg(long)]
    grid: Option<String>,
    /// Emit the transition ladder up to this clique size.
    #[arg(long)]
    ladder: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    /// Vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Mean degree.
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Split the sample at the decomposition threshold for this epsilon.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Upper-tail excess parameter for planting, event flags, and the
    /// decomposition.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Plant a clique of this size at the planting level (needs --delta).
    #[arg(long)]
    plant: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Graph file: JSON if the extension is .json, else edge-list text.
    #[arg(long)]
    graph: Option<String>,
    /// Identity to check.
    #[arg(long, value_enum)]
    check: Option<CheckKind>,
    /// Output directory (optional; the report always prints to stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct TailsArgs {
    /// Tail side to estimate.
    #[arg(long, value_enum)]
    mode: Option<ModeKind>,
    /// Comma-separated vertex counts, e.g. 128,256,512.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    /// Mean degree.
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Tail excess parameter.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Monte Carlo trials per grid point and method.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct StructureArgs {
    /// Vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Mean degree.
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Conditioning excess parameter.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Localization slack in (0, 1).
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Conditioned samples to collect.
    #[arg(long)]
    samples: Option<usize>,
    /// Conditioning method.
    #[arg(long, value_enum)]
    method: Option<MethodKind>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    /// Clique spectral bound: lambda_1^2 <= ((k-1)/k) ||A||_F^2.
    SpectralBound,
    /// Simplex quadratic program optimum equals (k-1)/(2k).
    MotzkinStraus,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckKind::SpectralBound => write!(f, "spectral-bound"),
            CheckKind::MotzkinStraus => write!(f, "motzkin-straus"),
        }
    }
}

impl FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectral-bound" => Ok(CheckKind::SpectralBound),
            "motzkin-straus" => Ok(CheckKind::MotzkinStraus),
            other => Err(format!(
                "unknown check {other:?}: expected spectral-bound or motzkin-straus"
            )),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeKind {
    /// Upper tail: naive frequency, planted lower bound, union upper bound.
    Upper,
    /// Lower tail: direct frequency with the double-log trend column.
    Lower,
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeKind::Upper => write!(f, "upper"),
            ModeKind::Lower => write!(f, "lower"),
        }
    }
}

impl FromStr for ModeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper" => Ok(ModeKind::Upper),
            "lower" => Ok(ModeKind::Lower),
            other => Err(format!("unknown mode {other:?}: expected upper or lower")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    /// Exact rejection against the conditioning event.
    Rejection,
    /// Planted ensemble post-selected on the event.
    Planted,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodKind::Rejection => write!(f, "rejection"),
            MethodKind::Planted => write!(f, "planted"),
        }
    }
}

impl FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rejection" => Ok(MethodKind::Rejection),
            "planted" => Ok(MethodKind::Planted),
            other => Err(format!(
                "unknown method {other:?}: expected rejection or planted"
            )),
        }
    }
}

fn resolve_threads(resolver: &mut Resolver, flag: Option<usize>) -> Result<(), CliError> {
    let mut threads = resolver.opt(flag, "threads")?;
    if threads.is_none() {
        if let Ok(raw) = std::env::var("SPECTAIL_THREADS") {
            let parsed = raw.parse::<usize>().map_err(|e| {
                CliError::usage(format!("SPECTAIL_THREADS = {raw:?} is invalid: {e}"))
            })?;
            resolver
                .resolved
                .insert("threads".to_string(), parsed.to_string());
            threads = Some(parsed);
        }
    }
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::usage("threads must be positive"));
        }
        // A failure here means the global pool already exists, which only
        // happens in-process during tests; the run still proceeds.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli, command_line: Vec<String>) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let mut resolver = Resolver::new(file);
    resolve_threads(&mut resolver, cli.threads)?;
    match cli.command {
        Command::Rate(args) => commands::run_rate(args, resolver, command_line),
        Command::Sample(args) => commands::run_sample(args, resolver, command_line),
        Command::Verify(args) => commands::run_verify(args, resolver, command_line),
        Command::Tails(args) => commands::run_tails(args, resolver, command_line),
        Command::Structure(args) => commands::run_structure(args, resolver, command_line),
    }
}

fn main() -> ExitCode {
    let command_line: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&command_line) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Usage problems exit 1 with the synopsis clap rendered.
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli, command_line) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(1)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(2)
        }
    }
}
