//! `treeharm`: build harmonic models on the d-regular tree, sweep the
//! monotone functionals, run the verification suites, diff against closed
//! forms, and export plot data.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification failure,
//! 3 runtime (depth/arithmetic) error.

mod output;
mod run;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use treeharm_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "treeharm",
    version,
    about = "Harmonic functions on the infinite d-regular tree: exact functional sweeps and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute functional series and write one row per (functional, k).
    Sweep(RunArgs),
    /// Check harmonicity, the identity suite and monotonicity; exit 2 on
    /// any violation.
    Verify(RunArgs),
    /// Compare engine output against the family's closed forms; exit 2 on
    /// any nonzero difference.
    OracleDiff(RunArgs),
    /// Emit (k, value) pairs per functional as TSV for external plotting.
    PlotData(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Built-in model: bounded3, needweight3, double_half3, linear2, random.
    #[arg(long, conflicts_with = "model_file")]
    model: Option<String>,

    /// JSON model-definition file.
    #[arg(long)]
    model_file: Option<PathBuf>,

    /// Tree degree (random model only; built-ins fix their degree).
    #[arg(long)]
    d: Option<u32>,

    /// Slope parameter of the linear2 model, as a rational.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,

    /// Offset parameter of the linear2 model, as a rational.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,

    /// Exponent p >= 1 ("2", "3", "3/2", "1.5"). Exact mode requires an
    /// integer.
    #[arg(long, default_value = "2")]
    p: String,

    /// Largest level index to compute.
    #[arg(long)]
    kmax: Option<u32>,

    /// Arithmetic mode: "exact" or "float".
    #[arg(long, default_value = "exact")]
    mode: String,

    /// Mantissa bits for float mode.
    #[arg(long, default_value_t = treeharm_core::DEFAULT_PRECISION)]
    precision: u32,

    /// Seed for the random model family.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma list from {G, W, N, F, aggregates}.
    #[arg(long, default_value = "G,W,N")]
    functional: String,

    /// Level storage: "compressed" (default) or "enumerated".
    #[arg(long, default_value = "compressed")]
    repr: String,

    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format: csv, json or tsv.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Test hook: shift the value at "level:index" by +1 before verifying.
    #[arg(long, hide = true)]
    perturb: Option<String>,
}

/// Failures sorted by exit code.
pub enum AppError {
    Config(String),
    Verification(String),
    Runtime(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Verification(_) => 2,
            AppError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Verification(m) | AppError::Runtime(m) => m,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            InvalidDegree(_)
            | InvalidAddress { .. }
            | WrongDegree { .. }
            | RootArity { .. }
            | RootSumViolation { .. }
            | ClassNotInTable { .. }
            | CustomSplitterNotCompressible
            | ModeMismatch(_)
            | ParseRational { .. }
            | FamilyModelMismatch { .. }
            | UnsupportedOracleExponent { .. }
            | NonIntegerExponent(_)
            | ExponentOutOfRange(_)
            | ModelFile(_) => AppError::Config(e.to_string()),
            DepthInsufficient { .. }
            | EnumerationTooLarge { .. }
            | SplitterViolatesSum { .. }
            | SplitterUndefined { .. }
            | RootHasNoParent
            | NoEdgeAtRoot
            | OracleIndexOutOfRange { .. }
            | PerturbTarget { .. } => AppError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => run::sweep(&args),
        Command::Verify(args) => run::verify(&args),
        Command::OracleDiff(args) => run::oracle_diff(&args),
        Command::PlotData(args) => run::plot_data(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
