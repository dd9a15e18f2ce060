//! Benchmark configuration: a flat TOML file of `key = value` lines.
//!
//! ```toml
//! # Paths are relative to this file (or to $MLKFHE_DATA_DIR if not found there).
//! datasets = ["emotions.arff", "toy.csv"]
//! labels = 6                 # optional: label count (last columns); default auto
//! algorithms = ["kfhe-homer", "e-homer", "kfhe-cc", "ecc"]
//! control = "kfhe-homer"     # optional: reference for Finner-vs-control; default first algorithm
//! components = 10            # ensemble size T
//! folds = 5
//! repetitions = 2
//! seed = 1
//! weighting = "resample"     # or "direct"
//! kernels = ["linear", "radial"]
//! clusterings = ["random", "k-means", "balanced-k-means"]
//! record_timing = false      # wall-clock column; breaks byte-identical reruns
//! output_dir = "results"     # optional; --output-dir overrides
//! # binary learner
//! lambda = 0.001
//! rff_dim = 256
//! max_epochs = 500
//! learning_rate = 1.0
//! step_decay = 0.001
//! tolerance = 1e-6
//! ```

use std::path::{Path, PathBuf};

use mlkfhe_core::algorithm::{Algorithm, TrainSettings};
use mlkfhe_core::ensemble::WeightingMode;
use mlkfhe_core::experiment::ExperimentConfig;
use mlkfhe_core::learner::Kernel;
use mlkfhe_core::models::ClusterMethod;
use serde::Deserialize;

use crate::error::{config, CliResult};

pub const DATA_DIR_ENV: &str = "MLKFHE_DATA_DIR";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkFile {
    pub datasets: Vec<String>,
    pub labels: Option<usize>,
    pub algorithms: Vec<String>,
    pub control: Option<String>,
    pub components: Option<usize>,
    pub folds: Option<usize>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub weighting: Option<WeightingMode>,
    pub kernels: Option<Vec<Kernel>>,
    pub clusterings: Option<Vec<ClusterMethod>>,
    pub record_timing: Option<bool>,
    pub output_dir: Option<String>,
    pub lambda: Option<f64>,
    pub rff_dim: Option<usize>,
    pub max_epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub step_decay: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub datasets: Vec<PathBuf>,
    pub labels: Option<usize>,
    pub control: usize,
    pub experiment: ExperimentConfig,
    pub output_dir: Option<PathBuf>,
}

/// Resolves `path` against `base` (or the working directory), falling back
/// to the data directory named by `MLKFHE_DATA_DIR` when the file is not there.
pub fn resolve_data_path(path: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() {
        return p;
    }
    let primary = base.map_or_else(|| p.clone(), |b| b.join(&p));
    if primary.exists() {
        return primary;
    }
    match std::env::var_os(DATA_DIR_ENV).map(|d| PathBuf::from(d).join(&p)) {
        Some(alt) if alt.exists() => alt,
        _ => primary,
    }
}

fn parse_algorithm(name: &str) -> CliResult<Algorithm> {
    name.parse().map_err(|e: mlkfhe_core::error::Error| config(format!("algorithms: {e}")))
}

pub fn load_benchmark(path: &Path) -> CliResult<Benchmark> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let file: BenchmarkFile = toml::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if file.datasets.is_empty() {
        return Err(config("datasets: at least one dataset is required"));
    }
    let algorithms = file.algorithms.iter().map(|a| parse_algorithm(a)).collect::<CliResult<Vec<_>>>()?;
    let control = match &file.control {
        None => 0,
        Some(name) => {
            let alg = parse_algorithm(name)?;
            algorithms
                .iter()
                .position(|&a| a == alg)
                .ok_or_else(|| config(format!("control: {name} is not among the algorithms")))?
        }
    };
    let mut settings = TrainSettings::default();
    if let Some(v) = file.components {
        settings.components = v;
    }
    if let Some(v) = file.weighting {
        settings.weighting = v;
    }
    if let Some(v) = file.kernels.clone() {
        settings.kernels = v;
    }
    if let Some(v) = file.clusterings.clone() {
        settings.clusterings = v;
    }
    let l = &mut settings.learner;
    l.lambda = file.lambda.unwrap_or(l.lambda);
    l.rff_dim = file.rff_dim.unwrap_or(l.rff_dim);
    l.max_epochs = file.max_epochs.unwrap_or(l.max_epochs);
    l.learning_rate = file.learning_rate.unwrap_or(l.learning_rate);
    l.step_decay = file.step_decay.unwrap_or(l.step_decay);
    l.tolerance = file.tolerance.unwrap_or(l.tolerance);
    if settings.kernels.is_empty() {
        return Err(config("kernels: list is empty"));
    }
    if settings.clusterings.is_empty() {
        return Err(config("clusterings: list is empty"));
    }
    let defaults = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        algorithms,
        settings,
        folds: file.folds.unwrap_or(defaults.folds),
        repetitions: file.repetitions.unwrap_or(defaults.repetitions),
        seed: file.seed.unwrap_or(defaults.seed),
        record_timing: file.record_timing.unwrap_or(false),
    };
    experiment.validate().map_err(|e| config(e.to_string()))?;
    Ok(Benchmark {
        datasets: file.datasets.iter().map(|d| resolve_data_path(d, Some(base))).collect(),
        labels: file.labels,
        control,
        experiment,
        output_dir: file.output_dir.map(|d| base.join(d)),
    })
}
