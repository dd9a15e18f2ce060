use std::fs;
use std::path::{Path, PathBuf};

use mlkfhe_core::algorithm::{train, TrainSettings};
use mlkfhe_core::dataset::{Dataset, FeatureSource};
use mlkfhe_core::experiment::run_cv_experiment;
use mlkfhe_core::io::{load_dataset, LabelSpec};
use mlkfhe_core::metrics::{dataset_stats, MetricReport};
use mlkfhe_core::models::{threshold_scores, ScoreModel};
use mlkfhe_core::persist::ModelFile;

use crate::cli::{BenchmarkArgs, DataArgs, DatasetInfoArgs, EvaluateArgs, PredictArgs, StatsArgs, TrainArgs};
use crate::config::{load_benchmark, resolve_data_path};
use crate::error::{config, io, CliError, CliResult};
use crate::output::{real, write_csv, Meta};
use crate::report::{read_results, result_rows, write_reports, RESULTS_HEADER};

fn label_spec(labels: Option<usize>) -> LabelSpec {
    labels.map_or(LabelSpec::Auto, LabelSpec::Last)
}

fn load(path: &str, labels: Option<usize>) -> CliResult<Dataset> {
    Ok(load_dataset(&resolve_data_path(path, None), label_spec(labels))?)
}

fn load_args(d: &DataArgs) -> CliResult<Dataset> {
    load(&d.data, d.labels)
}

fn feature_names(data: &Dataset) -> Vec<String> {
    data.feature_sources().iter().map(FeatureSource::column_name).collect()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

fn parent_dir(path: &Path) -> CliResult<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) => create_dir(p),
        None => Ok(()),
    }
}

pub fn train_cmd(args: &TrainArgs, invocation: &str) -> CliResult<()> {
    if args.kernels.is_empty() {
        return Err(config("--kernels: give at least one kernel"));
    }
    if args.clusterings.is_empty() {
        return Err(config("--clusterings: give at least one method"));
    }
    let data = load_args(&args.data)?;
    let mut settings = TrainSettings {
        components: args.components as usize,
        weighting: args.weighting,
        kernels: args.kernels.clone(),
        clusterings: args.clusterings.clone(),
        ..TrainSettings::default()
    };
    if let Some(e) = args.max_epochs {
        settings.learner.max_epochs = e as usize;
    }
    if let Some(d) = args.rff_dim {
        settings.learner.rff_dim = d as usize;
    }
    let (model, report) = train(args.family, &data, &settings, args.seed)?;
    let mut file = ModelFile::new(args.family, args.seed, feature_names(&data), data.label_names().to_vec(), model)?;
    file.invocation = Some(invocation.to_string());
    parent_dir(&args.output)?;
    file.save(&args.output)?;

    let log_path = args.log.clone().unwrap_or_else(|| args.output.with_extension("log.csv"));
    parent_dir(&log_path)?;
    let rows: Vec<Vec<String>> = report
        .iter()
        .flat_map(|r| &r.trace)
        .map(|s| {
            vec![
                s.t.to_string(),
                real(s.noise),
                real(s.model_gain),
                real(s.model_variance),
                real(s.weight_gain),
                real(s.weight_variance),
                real(s.train_hamming),
            ]
        })
        .collect();
    let meta = Meta { seed: Some(args.seed), invocation: invocation.to_string() };
    write_csv(
        &log_path,
        &meta,
        &["t", "noise", "model_gain", "model_variance", "weight_gain", "weight_variance", "train_hamming"],
        &rows,
    )?;
    println!("wrote {} and {} ({} iterations)", args.output.display(), log_path.display(), rows.len());
    Ok(())
}

fn load_model_for(path: &Path, data: &Dataset) -> CliResult<ModelFile> {
    let file = ModelFile::load(path)?;
    if feature_names(data) != file.feature_names {
        return Err(CliError::Failed(format!(
            "{}: dataset features do not match the {} features the model was trained on",
            path.display(),
            file.feature_names.len()
        )));
    }
    Ok(file)
}

pub fn predict_cmd(args: &PredictArgs, invocation: &str) -> CliResult<()> {
    let data = load_args(&args.data)?;
    let file = load_model_for(&args.model, &data)?;
    let scores = file.model.predict_matrix(data.features())?;
    let rows: Vec<Vec<String>> = if args.scores {
        scores.rows().into_iter().map(|r| r.iter().map(|&v| real(v)).collect()).collect()
    } else {
        threshold_scores(scores.view()).rows().into_iter().map(|r| r.iter().map(u8::to_string).collect()).collect()
    };
    let header: Vec<&str> = file.label_names.iter().map(String::as_str).collect();
    parent_dir(&args.output)?;
    write_csv(&args.output, &Meta { seed: Some(file.seed), invocation: invocation.to_string() }, &header, &rows)?;
    println!("wrote {} predictions to {}", rows.len(), args.output.display());
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs, invocation: &str) -> CliResult<()> {
    let data = load_args(&args.data)?;
    let file = load_model_for(&args.model, &data)?;
    if data.label_names() != file.label_names.as_slice() {
        return Err(CliError::Failed("dataset labels do not match the model's labels".into()));
    }
    let scores = file.model.predict_matrix(data.features())?;
    let report = MetricReport::evaluate(data.labels(), threshold_scores(scores.view()).view())?;
    println!("hamming_loss {}", report.hamming_loss);
    println!("macro_f      {}", report.macro_f);
    for (name, f) in file.label_names.iter().zip(&report.per_label_f) {
        println!("  f[{name}] {f}");
    }
    if let Some(out) = &args.output {
        let mut rows = vec![
            vec!["hamming_loss".to_string(), String::new(), real(report.hamming_loss)],
            vec!["macro_f".to_string(), String::new(), real(report.macro_f)],
        ];
        for (name, (f, c)) in file.label_names.iter().zip(report.per_label_f.iter().zip(&report.confusions)) {
            rows.push(vec!["f".into(), name.clone(), real(*f)]);
            for (k, v) in [("tp", c.tp), ("fp", c.fp), ("fn", c.fn_), ("tn", c.tn)] {
                rows.push(vec![k.into(), name.clone(), v.to_string()]);
            }
        }
        parent_dir(out)?;
        write_csv(out, &Meta { seed: Some(file.seed), invocation: invocation.to_string() }, &["metric", "label", "value"], &rows)?;
    }
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Returns whether every cell succeeded.
pub fn benchmark_cmd(args: &BenchmarkArgs, invocation: &str) -> CliResult<bool> {
    let bench = load_benchmark(&args.config)?;
    let out_dir: PathBuf = args
        .output_dir
        .clone()
        .or(bench.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let mut datasets = Vec::new();
    for p in &bench.datasets {
        let name = dataset_name(p);
        if datasets.iter().any(|(n, _)| n == &name) {
            return Err(config(format!("datasets: two files are named {name:?}")));
        }
        datasets.push((name, load_dataset(p, label_spec(bench.labels))?));
    }
    let rows = run_cv_experiment(&datasets, &bench.experiment)?;
    create_dir(&out_dir)?;
    let meta = Meta { seed: Some(bench.experiment.seed), invocation: invocation.to_string() };
    write_csv(&out_dir.join("results.csv"), &meta, &RESULTS_HEADER, &result_rows(&rows))?;
    let control = bench.experiment.algorithms[bench.control];
    let table = write_reports(&out_dir, &meta, &rows, control)?;
    print!("{table}");
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see results.csv", rows.len());
    }
    println!("wrote {} result rows to {}", rows.len(), out_dir.display());
    Ok(failed == 0)
}

pub fn stats_cmd(args: &StatsArgs, invocation: &str) -> CliResult<bool> {
    let rows = read_results(&args.results)?;
    if rows.is_empty() {
        return Err(CliError::Failed(format!("{}: no result rows", args.results.display())));
    }
    let control = args.control.unwrap_or(rows[0].algorithm);
    if !rows.iter().any(|r| r.algorithm == control) {
        return Err(config(format!("--control: {control} does not appear in the results")));
    }
    let out_dir = args.output_dir.clone().unwrap_or_else(|| {
        args.results.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    create_dir(&out_dir)?;
    let table = write_reports(&out_dir, &Meta { seed: None, invocation: invocation.to_string() }, &rows, control)?;
    print!("{table}");
    Ok(rows.iter().all(|r| r.outcome.is_ok()))
}

pub fn dataset_info_cmd(args: &DatasetInfoArgs, invocation: &str) -> CliResult<()> {
    let mut rows = Vec::new();
    for p in &args.paths {
        let path = resolve_data_path(p, None);
        let s = dataset_stats(&load_dataset(&path, label_spec(args.labels))?);
        rows.push(vec![
            dataset_name(&path),
            s.instances.to_string(),
            s.attributes.to_string(),
            s.features.to_string(),
            s.labels.to_string(),
            s.labelsets.to_string(),
            real(s.cardinality),
            real(s.mean_ir),
        ]);
        println!(
            "{}: n={} d={} ({} encoded) q={} labelsets={} cardinality={:.3} MeanIR={:.3}",
            dataset_name(&path),
            s.instances,
            s.attributes,
            s.features,
            s.labels,
            s.labelsets,
            s.cardinality,
            s.mean_ir
        );
    }
    if let Some(out) = &args.output {
        parent_dir(out)?;
        write_csv(
            out,
            &Meta { seed: None, invocation: invocation.to_string() },
            &["dataset", "instances", "attributes", "features", "labels", "labelsets", "cardinality", "mean_ir"],
            &rows,
        )?;
    }
    Ok(())
}
