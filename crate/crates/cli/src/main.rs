//! `abelfn`: batch front end for theta evaluation, expansion checks,
//! instance generation and the integrable-system evaluators.
//!
//! Exit codes: 0 success, 1 a verified property failed, 2 invalid input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "abelfn", version, about = "Theta functions of abelian varieties and their restrictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a theta function with characteristic (and derivatives).
    ThetaEval(ThetaEvalArgs),
    /// Check the restriction expansion on random samples.
    ExpandVerify(ExpandVerifyArgs),
    /// Write a synthetic embedding instance.
    GenInstance(GenInstanceArgs),
    /// Integrate the Toda chain and report conservation drift.
    TodaRun(TodaRunArgs),
    /// Compare the Jacobi and Prym forms of the CKP potential.
    CkpCompare(CkpCompareArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Evaluation tolerance, in [1e-14, 1e-2].
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (rows or document); stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ThetaEvalArgs {
    /// Path to a JSON file, or the JSON document itself.
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ExpandVerifyArgs {
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_accept: f64,
    /// Also write the coefficient vectors of every sample here.
    #[arg(long)]
    pub coeffs_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Prym,
    Generic,
}

#[derive(Args, Debug)]
pub struct GenInstanceArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub g: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub gtilde: Option<usize>,
    /// Polarization diagonal for generic instances, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<i64>>,
    /// Conjugate generic maps by a random unimodular matrix.
    #[arg(long)]
    pub twist: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalArg {
    Verbatim,
    CartanConsistent,
}

#[derive(Args, Debug)]
pub struct TodaRunArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,1,1")]
    pub x0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.1,-0.2,0.1")]
    pub y0: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub tend: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Number of evenly spaced output times, including both ends.
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = DiagonalArg::Verbatim)]
    pub diagonal: DiagonalArg,
    /// Trajectory CSV; omitted when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CkpCompareArgs {
    /// FlowData JSON (path or inline); generated from the seed when absent.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub g: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub flows: usize,
    /// Number of time samples; the first uses the data's own times.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_accept: f64,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::ThetaEval(a) => commands::theta_eval(&a),
        Command::ExpandVerify(a) => commands::expand_verify(&a),
        Command::GenInstance(a) => commands::gen_instance(&a),
        Command::TodaRun(a) => commands::toda_run(&a),
        Command::CkpCompare(a) => commands::ckp_compare(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}: {}", e.name, e.message);
            ExitCode::from(e.code)
        }
    }
}
