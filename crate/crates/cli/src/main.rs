//! `moviecast` — reproducible pipeline runs over the movie-success toolkit.
//!
//! Every subcommand writes its fully resolved configuration next to its
//! outputs, keeps timestamps out of data files (they go to `run.log`), and
//! removes partial outputs on failure. Exit codes: 0 success, 2 usage,
//! 3 data error, 4 extractor error, 5 training error.

mod commands;

use clap::{Args, Parser, Subcommand};
use moviecast_core::Error;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "moviecast", version, about = "Movie-success modeling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-signal synthetic corpus (movies.csv, reviews.csv)
    Synth(SynthArgs),
    /// Diffusion-model operations
    #[command(subcommand)]
    Sir(SirCommand),
    /// Sentiment extraction
    #[command(subcommand)]
    Sentiment(SentimentCommand),
    /// Assemble the feature matrix from movies, reviews, and sentiment
    Featurize(FeaturizeArgs),
    /// Train the multi-task network on a feature matrix
    Train(TrainArgs),
    /// Evaluate a checkpoint on the held-out split or by 10-fold CV
    Evaluate(EvaluateArgs),
    /// Run the seven-condition ablation table
    Ablate(AblateArgs),
    /// Per-movie predictions from a checkpoint
    Predict(PredictArgs),
}

#[derive(Subcommand)]
enum SirCommand {
    /// Integrate the compartment dynamics and write a trajectory CSV
    Simulate(SirSimulateArgs),
    /// Estimate per-movie initial conditions and rates from reviews
    Fit(SirFitArgs),
}

#[derive(Subcommand)]
enum SentimentCommand {
    /// Extract per-review sentiment to JSON lines
    Extract(SentimentExtractArgs),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// Number of movies
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Planted signal strength in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 30)]
    reviews_min: usize,
    #[arg(long, default_value_t = 80)]
    reviews_max: usize,
    /// Generator constants (JSON); defaults to the built-in configuration
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct SirSimulateArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.82)]
    s0: f64,
    #[arg(long, default_value_t = 0.14)]
    i0: f64,
    #[arg(long, default_value_t = 0.04)]
    r0: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 90.0)]
    horizon: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct SirFitArgs {
    #[arg(long)]
    movies: PathBuf,
    #[arg(long)]
    reviews: PathBuf,
    /// Pre-extracted sentiment JSONL; omitted, the stub extractor runs
    #[arg(long)]
    sentiment: Option<PathBuf>,
    /// Anonymization salt applied while loading reviews
    #[arg(long, default_value = "moviecast")]
    salt: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct SentimentExtractArgs {
    #[arg(long)]
    movies: PathBuf,
    #[arg(long)]
    reviews: PathBuf,
    /// stub or remote
    #[arg(long, default_value = "stub")]
    extractor: String,
    /// Remote endpoint configuration (JSON), used with --extractor remote
    #[arg(long)]
    remote_config: Option<PathBuf>,
    #[arg(long, default_value = "moviecast")]
    salt: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct FeaturizeArgs {
    #[arg(long)]
    movies: PathBuf,
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    sentiment: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Comma-separated groups to drop (SIR, Sentiment, Events)
    #[arg(long)]
    mask: Option<String>,
    #[arg(long, default_value = "moviecast")]
    salt: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize, Clone)]
struct NetOverrides {
    /// Full network configuration (JSON); overrides below still apply
    #[arg(long)]
    net_config: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    net: NetOverrides,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// test (held-out rows) or cv10 (10-fold CV over raw features)
    #[arg(long, default_value = "test")]
    split: String,
    /// Raw feature rows (features_raw.csv), required for cv10
    #[arg(long)]
    raw_features: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct AblateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    net: NetOverrides,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ExtractorUnavailable(_) | Error::MalformedResponse(_) | Error::Http(_) => 4,
        Error::NonFiniteLoss(_) | Error::EmptyDataset | Error::ShapeMismatch(_) => 5,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Sir(SirCommand::Simulate(args)) => commands::sir_simulate(args),
        Command::Sir(SirCommand::Fit(args)) => commands::sir_fit(args),
        Command::Sentiment(SentimentCommand::Extract(args)) => commands::sentiment_extract(args),
        Command::Featurize(args) => commands::featurize(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Ablate(args) => commands::ablate(args),
        Command::Predict(args) => commands::predict(args),
    };
    if let Err(e) = result {
        eprintln!(
            "error: {}",
            serde_json::json!({"kind": e.kind(), "message": e.to_string()})
        );
        std::process::exit(exit_code(&e));
    }
}
