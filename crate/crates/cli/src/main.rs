//! `convnilm`: prepare datasets, train, evaluate and run the disaggregation
//! network from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
mod dataset;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convnilm_core::data::DatasetKind;
use convnilm_core::model::Variant;
use convnilm_core::train::LossKind;

use failure::{Failure, USAGE};

#[derive(Parser, Debug)]
#[command(name = "convnilm", version, about = "Energy disaggregation with a fully convolutional separation network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn a REDD or UK-DALE house directory into a windowed dataset.
    Prepare(PrepareArgs),
    /// Generate a synthetic dataset from appliance specifications.
    Synth(SynthArgs),
    /// Train with time-blocked cross-validation.
    Train(TrainArgs),
    /// Compute MAE, estimated accuracy and SAE on validation windows.
    Eval(EvalArgs),
    /// Split an aggregate channel file into per-appliance series.
    Disaggregate(DisaggregateArgs),
    /// Print a checkpoint's configuration, parameters and receptive field.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[arg(long, value_parser = parse_dataset)]
    pub dataset: DatasetKind,
    /// Directory holding `house_<N>` subdirectories.
    #[arg(long, default_value = ".")]
    pub root: PathBuf,
    #[arg(long)]
    pub house: u32,
    /// Number of appliances to keep, ranked by energy.
    #[arg(long)]
    pub top: Option<usize>,
    /// Samples per window (one day at the dataset's rate by default).
    #[arg(long)]
    pub window: Option<usize>,
    /// Name of the extra appliance added to a summed aggregate.
    #[arg(long)]
    pub extra: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML file with `[[appliance]]` tables; three default appliances when
    /// absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Samples per window.
    #[arg(long = "T", alias = "len", default_value_t = 2048)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub windows: usize,
    /// Gaussian noise standard deviation in watts.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds between samples.
    #[arg(long, default_value_t = 6.0)]
    pub period: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_loss)]
    pub loss: Option<LossKind>,
    /// Train only the first N folds.
    #[arg(long)]
    pub max_folds: Option<usize>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Print every Nth epoch line to stdout (all go to the log file).
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Validation fold to evaluate; the checkpoint's own fold by default.
    #[arg(long)]
    pub fold: Option<usize>,
    /// Evaluate every window instead of one fold's validation block.
    #[arg(long)]
    pub all: bool,
    /// Report metrics on the scaled signals instead of watts.
    #[arg(long)]
    pub scaled: bool,
}

#[derive(Args, Debug)]
pub struct DisaggregateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Aggregate channel file of `<unix-seconds> <watts>` lines.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Process the signal in chunks; causal checkpoints only.
    #[arg(long)]
    pub stream: bool,
    /// Chunk length in samples (receptive field by default).
    #[arg(long)]
    pub chunk: Option<usize>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
}

fn parse_dataset(s: &str) -> Result<DatasetKind, String> {
    s.parse()
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: convnilm_core::ModelError| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse()
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("NILM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("NILM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Disaggregate(a) => commands::disaggregate(a),
        Command::Inspect(a) => commands::inspect(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
