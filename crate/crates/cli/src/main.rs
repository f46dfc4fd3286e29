//! `dpsn`: fit, predict, explain and benchmark from the command line.
//!
//! Exit status: 0 success, 2 configuration error, 3 data error,
//! 4 runtime failure.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<dpsn::Error> for CliError {
    fn from(e: dpsn::Error) -> Self {
        match e {
            dpsn::Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            e if e.is_data_error() => CliError::Data(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dpsn",
    version,
    about = "Interpretable few-shot time-series classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write its bundle.
    Fit(FitArgs),
    /// Classify a test file with a saved bundle.
    Predict(PredictArgs),
    /// Representative series and discriminative shapelet per class.
    Explain(ExplainArgs),
    /// Resampled few-shot evaluation against the 1-NN baselines.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Flat TOML file of SFA and training parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    pub emit: Vec<Emit>,
}

#[derive(Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Explain this bundle; without it a model is fitted on `--train`.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare z-normalized subsequences instead of raw ones.
    #[arg(long)]
    pub znorm: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,svg")]
    pub emit: Vec<Emit>,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Benchmark TOML; alternatively give one dataset with --train/--test.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "test", conflicts_with = "config")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train", conflicts_with = "config")]
    pub test: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    pub params: Option<PathBuf>,
    /// Base seed; repeat `i` samples with `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<dpsn::Method>,
    #[arg(long, value_delimiter = ',', conflicts_with = "ratio")]
    pub shots: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ratio: Vec<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    pub emit: Vec<Emit>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Explain(a) => commands::explain(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
