//! Benchmark tables: per-cell results, per-dataset ranks, significance tests,
//! critical-difference data and a plain-text summary.

use std::path::Path;

use mlkfhe_core::algorithm::Algorithm;
use mlkfhe_core::experiment::{friedman_over_datasets, pairwise_wilcoxon, summarise, CellResult, Summary};
use mlkfhe_core::metrics::MetricReport;
use mlkfhe_core::stats::FriedmanResult;

use crate::error::{CliError, CliResult};
use crate::output::{real, write_csv, write_text, Meta};

pub const RESULTS_HEADER: [&str; 8] =
    ["dataset", "algorithm", "repetition", "fold", "macro_f", "hamming_loss", "train_seconds", "error"];

/// Significance level for the critical-difference connections.
pub const ALPHA: f64 = 0.05;

pub fn result_rows(rows: &[CellResult]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let (f, h, e) = match &r.outcome {
                Ok(m) => (real(m.macro_f), real(m.hamming_loss), String::new()),
                Err(e) => (String::new(), String::new(), e.clone()),
            };
            vec![
                r.dataset.clone(),
                r.algorithm.to_string(),
                r.repetition.to_string(),
                r.fold.to_string(),
                f,
                h,
                r.train_seconds.map(real).unwrap_or_default(),
                e,
            ]
        })
        .collect()
}

/// Reads a results file written by [`result_rows`]; per-label details are not stored.
pub fn read_results(path: &Path) -> CliResult<Vec<CellResult>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    let bad = |line: u64, m: String| CliError::Failed(format!("{}:{line}: {m}", path.display()));
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != RESULTS_HEADER.len() {
            return Err(bad(line, format!("expected {} columns", RESULTS_HEADER.len())));
        }
        let num = |i: usize| rec[i].parse::<usize>().map_err(|e| bad(line, format!("{}: {e}", RESULTS_HEADER[i])));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(line, format!("{}: {e}", RESULTS_HEADER[i])));
        let outcome = if rec[7].is_empty() {
            Ok(MetricReport { hamming_loss: real(5)?, macro_f: real(4)?, per_label_f: Vec::new(), confusions: Vec::new() })
        } else {
            Err(rec[7].to_string())
        };
        out.push(CellResult {
            dataset: rec[0].to_string(),
            algorithm: rec[1].parse().map_err(|e: mlkfhe_core::error::Error| bad(line, e.to_string()))?,
            repetition: num(2)?,
            fold: num(3)?,
            outcome,
            train_seconds: if rec[6].is_empty() { None } else { Some(real(6)?) },
        });
    }
    Ok(out)
}

fn algorithms_in(rows: &[CellResult]) -> Vec<Algorithm> {
    let mut out = Vec::new();
    for r in rows {
        if !out.contains(&r.algorithm) {
            out.push(r.algorithm);
        }
    }
    out
}

fn datasets_in(summaries: &[Summary]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in summaries {
        if !out.contains(&s.dataset) {
            out.push(s.dataset.clone());
        }
    }
    out
}

/// Mean rank of each algorithm over datasets.
pub fn average_ranks(summaries: &[Summary], algorithms: &[Algorithm]) -> Vec<f64> {
    algorithms
        .iter()
        .map(|&a| {
            let ranks: Vec<f64> = summaries.iter().filter(|s| s.algorithm == a).map(|s| s.rank).collect();
            ranks.iter().sum::<f64>() / ranks.len() as f64
        })
        .collect()
}

fn rank_rows(summaries: &[Summary], algorithms: &[Algorithm]) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.dataset.clone(),
                s.algorithm.to_string(),
                real(s.macro_f_mean),
                real(s.macro_f_sd),
                real(s.hamming_mean),
                real(s.hamming_sd),
                s.completed.to_string(),
                s.failed.to_string(),
                real(s.rank),
            ]
        })
        .collect();
    for (a, r) in algorithms.iter().zip(average_ranks(summaries, algorithms)) {
        let mut row = vec![String::new(); 9];
        row[0] = "Avg. rank".into();
        row[1] = a.to_string();
        row[8] = real(r);
        rows.push(row);
    }
    rows
}

fn stats_rows(rows: &[CellResult], algorithms: &[Algorithm], friedman: &Result<FriedmanResult, String>) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for t in pairwise_wilcoxon(rows, algorithms) {
        let (stat, p, note) = match &t.result {
            Ok(w) => (real(w.statistic), real(w.p_value), if w.exact { "exact" } else { "normal" }.to_string()),
            Err(e) => (String::new(), String::new(), e.clone()),
        };
        out.push(vec!["wilcoxon".into(), t.dataset, t.first.to_string(), t.second.to_string(), stat, p, String::new(), note]);
    }
    match friedman {
        Ok(f) => {
            let name = |i: usize| algorithms[i].to_string();
            out.push(vec![
                "friedman".into(),
                "*".into(),
                String::new(),
                String::new(),
                real(f.chi_square),
                real(f.p_value),
                String::new(),
                format!("{} datasets", f.n_datasets),
            ]);
            for c in &f.vs_control {
                out.push(vec![
                    "finner-control".into(),
                    "*".into(),
                    name(c.first),
                    name(c.second),
                    real(c.z),
                    real(c.p_value),
                    real(c.adjusted_p),
                    String::new(),
                ]);
            }
            for c in &f.all_pairs {
                out.push(vec![
                    "finner-pairs".into(),
                    "*".into(),
                    name(c.first),
                    name(c.second),
                    real(c.z),
                    real(c.p_value),
                    real(c.adjusted_p),
                    String::new(),
                ]);
            }
        }
        Err(e) => out.push(vec![
            "friedman".into(),
            "*".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            e.clone(),
        ]),
    }
    out
}

fn cd_rows(f: &FriedmanResult, algorithms: &[Algorithm]) -> Vec<Vec<String>> {
    f.all_pairs
        .iter()
        .map(|c| {
            vec![
                algorithms[c.first].to_string(),
                real(f.average_ranks[c.first]),
                algorithms[c.second].to_string(),
                real(f.average_ranks[c.second]),
                real(c.adjusted_p),
                u8::from(c.adjusted_p >= ALPHA).to_string(),
            ]
        })
        .collect()
}

/// Datasets down, algorithms across; cells read `mean ± sd (rank)`.
pub fn summary_table(summaries: &[Summary], algorithms: &[Algorithm]) -> String {
    let datasets = datasets_in(summaries);
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut head = vec!["dataset".to_string()];
    head.extend(algorithms.iter().map(|a| a.to_string()));
    grid.push(head);
    for ds in &datasets {
        let mut row = vec![ds.clone()];
        for &a in algorithms {
            let cell = summaries.iter().find(|s| &s.dataset == ds && s.algorithm == a).map_or_else(String::new, |s| {
                if s.failed > 0 {
                    format!("failed ({})", s.rank)
                } else {
                    format!("{:.4} ± {:.4} ({})", s.macro_f_mean, s.macro_f_sd, s.rank)
                }
            });
            row.push(cell);
        }
        grid.push(row);
    }
    let mut avg = vec!["Avg. rank".to_string()];
    avg.extend(average_ranks(summaries, algorithms).iter().map(|r| format!("{r:.2}")));
    grid.push(avg);

    let widths: Vec<usize> = (0..grid[0].len()).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, &w))| {
                let pad = w - v.chars().count();
                if c == 0 { format!("{v}{}", " ".repeat(pad)) } else { format!("{}{v}", " ".repeat(pad)) }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 || i == grid.len() - 2 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

/// Writes ranks, stats, critical-difference and summary files for `rows`.
/// Returns the summary table.
pub fn write_reports(dir: &Path, meta: &Meta, rows: &[CellResult], control: Algorithm) -> CliResult<String> {
    let algorithms = algorithms_in(rows);
    let summaries = summarise(rows);
    let control_idx = algorithms.iter().position(|&a| a == control).unwrap_or(0);
    let friedman = friedman_over_datasets(&summaries, &algorithms, control_idx).map_err(|e| e.to_string());
    write_csv(
        &dir.join("ranks.csv"),
        meta,
        &["dataset", "algorithm", "macro_f_mean", "macro_f_sd", "hamming_mean", "hamming_sd", "completed", "failed", "rank"],
        &rank_rows(&summaries, &algorithms),
    )?;
    write_csv(
        &dir.join("stats.csv"),
        meta,
        &["test", "dataset", "first", "second", "statistic", "p_value", "adjusted_p", "note"],
        &stats_rows(rows, &algorithms, &friedman),
    )?;
    let cd = friedman.as_ref().map(|f| cd_rows(f, &algorithms)).unwrap_or_default();
    write_csv(
        &dir.join("cd_plot.csv"),
        meta,
        &["algorithm_a", "avg_rank_a", "algorithm_b", "avg_rank_b", "adjusted_p", "connected"],
        &cd,
    )?;
    let table = summary_table(&summaries, &algorithms);
    write_text(&dir.join("summary.txt"), meta, &table)?;
    Ok(table)
}
