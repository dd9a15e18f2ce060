//! Repeated stratified cross-validation over datasets and algorithms.
//!
//! Within a repetition every algorithm sees the same folds, and within a
//! fold every algorithm gets the same training seed, so results pair up for
//! signed-rank tests.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{train, Algorithm, TrainSettings};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::models::{threshold_scores, ScoreModel};
use crate::seed::derive_seed;
use crate::stats::{friedman_finner, midranks, wilcoxon_signed_rank, Direction, FriedmanResult, WilcoxonResult};
use crate::stratify::{iterative_stratification, FoldAssignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub settings: TrainSettings,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Measure wall-clock training time (makes output run-dependent).
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::KfheHomer, Algorithm::EHomer, Algorithm::KfheCc, Algorithm::Ecc],
            settings: TrainSettings::default(),
            folds: 5,
            repetitions: 2,
            seed: 0,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.settings.components < 1 {
            return Err(Error::invalid("components must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("no algorithms configured"));
        }
        let mut sorted = self.algorithms.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.algorithms.len() {
            return Err(Error::invalid("an algorithm is listed twice"));
        }
        self.settings.learner.validate()
    }

    fn fold_seed(&self, dataset: usize, repetition: usize) -> u64 {
        derive_seed(derive_seed(self.seed, dataset as u64), repetition as u64)
    }
}

/// Folds for each repetition of dataset number `dataset_index`.
pub fn fold_assignments(data: &Dataset, dataset_index: usize, config: &ExperimentConfig) -> Result<Vec<FoldAssignment>> {
    (0..config.repetitions)
        .map(|r| {
            let seed = config.fold_seed(dataset_index, r);
            Ok(FoldAssignment {
                folds: iterative_stratification(data.labels(), config.folds, seed)?,
                n_folds: config.folds,
                repetition: r,
                seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub repetition: usize,
    pub fold: usize,
    /// The metrics, or the error that stopped training or evaluation.
    pub outcome: std::result::Result<MetricReport, String>,
    pub train_seconds: Option<f64>,
}

fn run_cell(
    algorithm: Algorithm,
    data: &Dataset,
    assignment: &FoldAssignment,
    fold: usize,
    seed: u64,
    config: &ExperimentConfig,
) -> (std::result::Result<MetricReport, String>, Option<f64>) {
    let start = Instant::now();
    let outcome = (|| {
        let (train_rows, test_rows) = assignment.split(fold);
        let train_data = data.select(&train_rows)?;
        let test_data = data.select(&test_rows)?;
        let (model, _) = train(algorithm, &train_data, &config.settings, seed)?;
        let elapsed = start.elapsed().as_secs_f64();
        let scores = model.predict_matrix(test_data.features())?;
        let report = MetricReport::evaluate(test_data.labels(), threshold_scores(scores.view()).view())?;
        Ok::<_, Error>((report, elapsed))
    })();
    match outcome {
        Ok((report, secs)) => (Ok(report), config.record_timing.then_some(secs)),
        Err(e) => (Err(e.to_string()), None),
    }
}

/// Runs every (dataset, repetition, fold, algorithm) cell. Rows come back
/// sorted by dataset order, repetition, fold, then configured algorithm order.
pub fn run_cv_experiment(datasets: &[(String, Dataset)], config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (d, (_, data)) in datasets.iter().enumerate() {
        for assignment in fold_assignments(data, d, config)? {
            for fold in 0..config.folds {
                for (a, &alg) in config.algorithms.iter().enumerate() {
                    jobs.push((d, assignment.clone(), fold, a, alg));
                }
            }
        }
    }
    let mut rows: Vec<((usize, usize, usize, usize), CellResult)> = jobs
        .into_par_iter()
        .map(|(d, assignment, fold, a, alg)| {
            let (name, data) = &datasets[d];
            let seed = derive_seed(assignment.seed, 1 + fold as u64);
            let (outcome, train_seconds) = run_cell(alg, data, &assignment, fold, seed, config);
            if let Err(e) = &outcome {
                log::error!("{name} {alg} rep {} fold {fold}: {e}", assignment.repetition);
            }
            let key = (d, assignment.repetition, fold, a);
            (
                key,
                CellResult {
                    dataset: name.clone(),
                    algorithm: alg,
                    repetition: assignment.repetition,
                    fold,
                    outcome,
                    train_seconds,
                },
            )
        })
        .collect();
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub macro_f_mean: f64,
    pub macro_f_sd: f64,
    pub hamming_mean: f64,
    pub hamming_sd: f64,
    pub completed: usize,
    pub failed: usize,
    /// Rank among algorithms on this dataset by mean macro-F (1 = best).
    pub rank: f64,
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per (dataset, algorithm) aggregates in first-appearance order. Algorithms
/// with any failed cell rank last on that dataset.
pub fn summarise(rows: &[CellResult]) -> Vec<Summary> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm);
        }
    }
    let mut out = Vec::new();
    for ds in datasets {
        let mut block: Vec<Summary> = algorithms
            .iter()
            .map(|&alg| {
                let cells: Vec<&CellResult> = rows.iter().filter(|r| r.dataset == ds && r.algorithm == alg).collect();
                let ok: Vec<&MetricReport> = cells.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                let (macro_f_mean, macro_f_sd) = mean_sd(&ok.iter().map(|m| m.macro_f).collect::<Vec<_>>());
                let (hamming_mean, hamming_sd) = mean_sd(&ok.iter().map(|m| m.hamming_loss).collect::<Vec<_>>());
                Summary {
                    dataset: ds.to_string(),
                    algorithm: alg,
                    macro_f_mean,
                    macro_f_sd,
                    hamming_mean,
                    hamming_sd,
                    completed: ok.len(),
                    failed: cells.len() - ok.len(),
                    rank: f64::NAN,
                }
            })
            .collect();
        let keys: Vec<f64> = block
            .iter()
            .map(|s| if s.failed > 0 || s.completed == 0 { f64::INFINITY } else { -s.macro_f_mean })
            .collect();
        for (s, r) in block.iter_mut().zip(midranks(&keys)) {
            s.rank = r;
        }
        out.extend(block);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub dataset: String,
    pub first: Algorithm,
    pub second: Algorithm,
    pub result: std::result::Result<WilcoxonResult, String>,
}

/// Signed-rank test on per-fold macro-F for every algorithm pair on every dataset.
pub fn pairwise_wilcoxon(rows: &[CellResult], algorithms: &[Algorithm]) -> Vec<PairTest> {
    let mut datasets: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let series = |ds: &str, alg: Algorithm| -> Option<Vec<f64>> {
        rows.iter()
            .filter(|r| r.dataset == ds && r.algorithm == alg)
            .map(|r| r.outcome.as_ref().ok().map(|m| m.macro_f))
            .collect()
    };
    let mut out = Vec::new();
    for ds in datasets {
        for (i, &a) in algorithms.iter().enumerate() {
            for &b in &algorithms[i + 1..] {
                let result = match (series(ds, a), series(ds, b)) {
                    (Some(x), Some(y)) => wilcoxon_signed_rank(&x, &y).map_err(|e| e.to_string()),
                    _ => Err("a cell failed".to_string()),
                };
                out.push(PairTest { dataset: ds.to_string(), first: a, second: b, result });
            }
        }
    }
    out
}

/// Friedman/Finner over datasets on mean macro-F; needs two or more datasets.
pub fn friedman_over_datasets(summaries: &[Summary], algorithms: &[Algorithm], control: usize) -> Result<FriedmanResult> {
    let mut datasets: Vec<&str> = Vec::new();
    for s in summaries {
        if !datasets.contains(&s.dataset.as_str()) {
            datasets.push(&s.dataset);
        }
    }
    let table: Vec<Vec<f64>> = datasets
        .iter()
        .map(|ds| {
            algorithms
                .iter()
                .map(|&alg| {
                    summaries
                        .iter()
                        .find(|s| s.dataset == *ds && s.algorithm == alg)
                        .filter(|s| s.failed == 0 && s.completed > 0)
                        .map(|s| s.macro_f_mean)
                        .ok_or_else(|| Error::invalid(format!("{alg} has no complete result on {ds}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    friedman_finner(&table, control, Direction::HigherIsBetter)
}
