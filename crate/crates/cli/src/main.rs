//! `crange`: sample, optimize and classify relative C-numerical ranges from the shell.
//!
//! Every command prints one JSON document on stdout. Exit codes: 0 when the
//! decision asked for is positive (or the command just reports), 1 when it is
//! negative, 2 on I/O, parse or argument errors, 3 on dimension mismatch.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "crange", version, about = "Relative C-numerical ranges and their rotational symmetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample W_K(C, A) and summarize the cloud.
    Range(RangeArgs),
    /// Estimate the C-numerical radius by gradient ascent on K.
    Radius(RadiusArgs),
    /// Decide weak rotational symmetry of the K-orbit of A.
    Symmetry(SymmetryArgs),
    /// Tools specific to SU(2) x ... x SU(2).
    #[command(subcommand)]
    Local(LocalCommand),
    /// Run one of the built-in worked examples (1 to 5).
    Example(ExampleArgs),
}

#[derive(Subcommand, Debug)]
pub enum LocalCommand {
    /// Search a local unitary taking a 4x4 matrix into one of the 32 case patterns.
    Classify(ClassifyArgs),
    /// Search signed local permutations for block-shift forms.
    Conjecture(ConjectureArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the feasibility tolerance.
    #[arg(long = "tol-feas", value_name = "TOL")]
    pub tol_feas: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RangeArgs {
    #[arg(long = "C", value_name = "FILE")]
    pub c: PathBuf,
    #[arg(long = "A", value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long)]
    pub group: String,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// CSV file for the sampled points.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct RadiusArgs {
    #[arg(long = "C", value_name = "FILE")]
    pub c: PathBuf,
    #[arg(long = "A", value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long)]
    pub group: String,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryMode {
    /// Linear feasibility over the Lie algebra of the group.
    Detect,
    /// Exact rational feasibility over the local torus.
    Tloc,
    /// Unitary similarity to a block-shift matrix.
    Blockshift,
}

#[derive(Args, Debug)]
pub struct SymmetryArgs {
    #[arg(long = "A", value_name = "FILE")]
    pub a: PathBuf,
    /// Required for `detect`.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, value_enum, default_value_t = SymmetryMode::Detect)]
    pub mode: SymmetryMode,
    /// Number of qubits for `tloc`; inferred from the dimension when absent.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long = "A", value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConjectureArgs {
    #[arg(long)]
    pub n: usize,
    /// Planted samples for n = 3.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// JSON file for the per-case witness table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ExampleArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
    pub index: u8,
    /// Defaults depend on the example.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Restart budget for the local classification of example 4.
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.json).expect("serializable report"));
            ExitCode::from(if report.positive { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
