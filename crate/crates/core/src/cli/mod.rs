//! Command-line front end: exponent evaluation, parameter sweeps, Monte Carlo
//! runs, embedder comparison, oracle validation, and file-based embedding and
//! detection.
//!
//! Exit codes: 0 success, 1 analysis or validation failure (including I/O),
//! 2 usage or parameter error.

mod commands;
mod config;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::Error;
use crate::simulate::EmbedderKind;

pub use config::ConfigFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Failed(String),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Core(e) => match e {
                Error::InvalidParameter { .. }
                | Error::LengthMismatch { .. }
                | Error::Parse { .. }
                | Error::Json(_) => 2,
                Error::Io { .. } | Error::NonConvergence { .. } => 1,
            },
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "zerobit", version, about = "One-bit watermarking: error exponents, simulation and file tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the false-negative exponent for one parameter set as JSON.
    Exponent(ExponentArgs),
    /// Tabulate the exponent along one parameter axis.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of false-negative or false-positive rates.
    Simulate(SimulateArgs),
    /// Optimum versus sign embedder over a grid of λ.
    CompareEmbedders(CompareArgs),
    /// Compare closed form and numeric oracle over the built-in grid.
    Validate(ValidateArgs),
    /// Embed a watermark into a host signal file.
    Embed(EmbedArgs),
    /// Run the detector on a signal file.
    Detect(DetectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Model parameters. Commands that tabulate series accept comma-separated
/// lists and produce one output per combination.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Embedding distortion per dimension.
    #[arg(long = "D", value_delimiter = ',', allow_negative_numbers = true)]
    pub distortion: Vec<f64>,
    /// Host variance σ_X².
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sx2: Vec<f64>,
    /// Attack noise variance σ_Z².
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sz2: Vec<f64>,
    /// False-positive exponent λ.
    #[arg(long, visible_alias = "lambda-list", value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// JSON file with default values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum SweepAxis {
    #[value(name = "lambda")]
    #[serde(rename = "lambda")]
    Lambda,
    #[value(name = "sz2")]
    #[serde(rename = "sz2")]
    Sz2,
    #[value(name = "sx2")]
    #[serde(rename = "sx2")]
    Sx2,
    #[value(name = "D")]
    #[serde(rename = "D")]
    Distortion,
    /// Attack standard deviation σ_Z.
    #[value(name = "sz")]
    #[serde(rename = "sz")]
    Sz,
    /// Host standard deviation σ_X.
    #[value(name = "sx")]
    #[serde(rename = "sx")]
    Sx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepPreset {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub axis: Option<SweepAxis>,
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub end: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub preset: Option<SweepPreset>,
    /// Output file; series get a `_<param>_<value>` suffix. Stdout if absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Fn,
    Fp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimPreset {
    Fig5,
    Fig6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderArg {
    Optimal,
    Sign,
    None,
}

impl From<EmbedderArg> for EmbedderKind {
    fn from(e: EmbedderArg) -> Self {
        match e {
            EmbedderArg::Optimal => EmbedderKind::Optimal,
            EmbedderArg::Sign => EmbedderKind::Sign,
            EmbedderArg::None => EmbedderKind::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    pub kind: SimKind,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderArg>,
    /// Use the watermark generated from this seed in every trial.
    #[arg(long)]
    pub pin_watermark: Option<u64>,
    #[arg(long)]
    pub preset: Option<SimPreset>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ComparePreset {
    Fig7,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// λ grid start (ignored when --lambda is given).
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub end: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub preset: Option<ComparePreset>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Largest accepted |closed form − oracle|.
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KeyArgs {
    /// Watermark seed.
    #[arg(long, conflicts_with = "watermark")]
    pub seed: Option<u64>,
    /// Watermark file, one ±1 per line.
    #[arg(long)]
    pub watermark: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long = "D", allow_negative_numbers = true)]
    pub distortion: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "optimal")]
    pub embedder: EmbedderArg,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Metadata file; defaults to `<output>.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
