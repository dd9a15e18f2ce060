use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mlkfhe_core::algorithm::Algorithm;
use mlkfhe_core::ensemble::WeightingMode;
use mlkfhe_core::learner::Kernel;
use mlkfhe_core::models::ClusterMethod;

#[derive(Debug, Parser)]
#[command(name = "mlkfhe", version, about = "Kalman-filter fused multi-label ensembles")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and save it with a per-iteration log.
    Train(TrainArgs),
    /// Predict label sets (or scores) with a saved model.
    Predict(PredictArgs),
    /// Score a saved model on a labelled dataset.
    Evaluate(EvaluateArgs),
    /// Run a cross-validation benchmark described by a config file.
    Benchmark(BenchmarkArgs),
    /// Recompute ranks and significance tests from a results file.
    Stats(StatsArgs),
    /// Print dataset statistics.
    DatasetInfo(DatasetInfoArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (.arff or .csv); relative paths also resolve against $MLKFHE_DATA_DIR.
    #[arg(long)]
    pub data: String,

    /// Number of label columns at the end of each row. Without it, labels come
    /// from `-C n` in the ARFF relation or `label:` CSV column prefixes.
    #[arg(long)]
    pub labels: Option<usize>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: mlkfhe_core::error::Error| e.to_string())
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    Kernel::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown kernel {s:?} (linear, radial)"))
}

fn parse_clustering(s: &str) -> Result<ClusterMethod, String> {
    ClusterMethod::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown clustering {s:?} (random, k-means, balanced-k-means)"))
}

fn parse_weighting(s: &str) -> Result<WeightingMode, String> {
    match s {
        "resample" => Ok(WeightingMode::Resample),
        "direct" => Ok(WeightingMode::Direct),
        _ => Err(format!("unknown weighting {s:?} (resample, direct)")),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// kfhe-homer, kfhe-cc, e-homer, ecc, homer, cc, br or prior.
    #[arg(long, alias = "algorithm", value_parser = parse_algorithm)]
    pub family: Algorithm,

    /// Ensemble size T.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub components: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = "resample", value_parser = parse_weighting)]
    pub weighting: WeightingMode,

    /// Kernels components may draw from.
    #[arg(long, value_delimiter = ',', default_value = "linear,radial", value_parser = parse_kernel)]
    pub kernels: Vec<Kernel>,

    /// Clustering methods HOMER components may draw from.
    #[arg(long, value_delimiter = ',', default_value = "random,k-means,balanced-k-means", value_parser = parse_clustering)]
    pub clusterings: Vec<ClusterMethod>,

    /// Gradient-descent epochs per binary fit.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_epochs: Option<u64>,

    /// Random Fourier features for the radial kernel.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rff_dim: Option<u64>,

    /// Model file to write.
    #[arg(long, short, default_value = "model.json")]
    pub output: PathBuf,

    /// Per-iteration log (default: next to the model, `<name>.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Rows to predict, in the training file's layout (label columns are ignored).
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, short, default_value = "predictions.csv")]
    pub output: PathBuf,

    /// Write label scores instead of 0/1 label sets.
    #[arg(long)]
    pub scores: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Optional CSV with the overall and per-label metrics.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Benchmark config (flat TOML).
    #[arg(long)]
    pub config: PathBuf,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// A results.csv written by `benchmark`.
    #[arg(long)]
    pub results: PathBuf,

    /// Reference algorithm for the Finner-vs-control table (default: first in the file).
    #[arg(long, value_parser = parse_algorithm)]
    pub control: Option<Algorithm>,

    /// Output directory (default: the results file's directory).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetInfoArgs {
    #[arg(required = true)]
    pub paths: Vec<String>,

    #[arg(long)]
    pub labels: Option<usize>,

    /// Also write the statistics as CSV.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
