use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlkfhe_core::algorithm::{train, Algorithm, TrainSettings};
use mlkfhe_core::io::{load_dataset, save_csv, LabelSpec};
use mlkfhe_core::models::ScoreModel;
use mlkfhe_core::synthetic::{generate, SyntheticSpec};

fn mlkfhe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlkfhe"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/fixture.arff")
}

/// Non-comment CSV records, header included.
fn records(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn toy_csv(dir: &Path, name: &str, seed: u64) {
    let d = generate(&SyntheticSpec { instances: 40, features: 3, labels: 3, seed, ..Default::default() }).unwrap();
    save_csv(&d, &dir.join(name)).unwrap();
}

#[test]
fn invalid_flags_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let data = data.to_str().unwrap();
    for args in [
        vec!["train", "--data", data, "--family", "kfhe-cc", "--components", "0"],
        vec!["train", "--data", data, "--family", "nope"],
        vec!["train", "--data", data, "--family", "ecc", "--kernels", "cubic"],
        vec!["benchmark", "--config", "missing.toml"],
    ] {
        let out = mlkfhe(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = mlkfhe(dir.path(), &["train", "--data", "absent.arff", "--family", "br"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_writes_model_and_gain_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let args = ["train", "--data", data.to_str().unwrap(), "--family", "kfhe-homer", "--components", "10", "--seed", "7", "--max-epochs", "100"];
    let out = mlkfhe(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = records(&dir.path().join("model.log.csv"));
    assert_eq!(log[0][..3], ["t", "noise", "model_gain"]);
    assert_eq!(log.len(), 11);
    for (t, row) in log[1..].iter().enumerate() {
        assert_eq!(row[0], (t + 1).to_string());
        let k: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&k));
    }
    let first = fs::read(dir.path().join("model.json")).unwrap();
    let again = mlkfhe(dir.path(), &args);
    assert!(again.status.success());
    assert_eq!(first, fs::read(dir.path().join("model.json")).unwrap());
}

#[test]
fn predict_matches_in_process_model() {
    let dir = tempfile::tempdir().unwrap();
    toy_csv(dir.path(), "toy.csv", 4);
    let out = mlkfhe(dir.path(), &["train", "--data", "toy.csv", "--family", "kfhe-cc", "--components", "4", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = mlkfhe(dir.path(), &["predict", "--model", "model.json", "--data", "toy.csv", "--scores", "--output", "s.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let data = load_dataset(&dir.path().join("toy.csv"), LabelSpec::Auto).unwrap();
    let settings = TrainSettings { components: 4, ..Default::default() };
    let (model, _) = train(Algorithm::KfheCc, &data, &settings, 3).unwrap();
    let expect = model.predict_matrix(data.features()).unwrap();
    let rows = records(&dir.path().join("s.csv"));
    assert_eq!(rows[0], ["y0", "y1", "y2"]);
    assert_eq!(rows.len(), 41);
    for (i, row) in rows[1..].iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v.parse::<f64>().unwrap() - expect[[i, j]]).abs() <= 1e-12);
        }
    }

    let out = mlkfhe(dir.path(), &["predict", "--model", "model.json", "--data", "toy.csv"]);
    assert!(out.status.success());
    let hard = records(&dir.path().join("predictions.csv"));
    assert!(hard[1..].iter().flatten().all(|v| v == "0" || v == "1"));

    let out = mlkfhe(dir.path(), &["evaluate", "--model", "model.json", "--data", "toy.csv", "--output", "m.csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("macro_f"));
}

#[test]
fn predict_rejects_mismatched_features() {
    let dir = tempfile::tempdir().unwrap();
    toy_csv(dir.path(), "toy.csv", 4);
    let out = mlkfhe(dir.path(), &["train", "--data", "toy.csv", "--family", "br"]);
    assert!(out.status.success());
    let fx = fixture();
    let out = mlkfhe(dir.path(), &["predict", "--model", "model.json", "--data", fx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dataset_info_reports_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture();
    let out = mlkfhe(dir.path(), &["dataset-info", fx.to_str().unwrap(), "--output", "info.csv"]);
    assert!(out.status.success());
    let rows = records(&dir.path().join("info.csv"));
    assert_eq!(rows[1][..6], ["fixture", "24", "4", "7", "5", "12"]);
    assert!((rows[1][6].parse::<f64>().unwrap() - 52.0 / 24.0).abs() < 1e-12);
}

#[test]
fn benchmark_and_stats_reports() {
    let dir = tempfile::tempdir().unwrap();
    toy_csv(dir.path(), "a.csv", 1);
    toy_csv(dir.path(), "b.csv", 2);
    fs::write(
        dir.path().join("bench.toml"),
        "datasets = [\"a.csv\", \"b.csv\"]\nalgorithms = [\"kfhe-cc\", \"cc\", \"br\"]\ncomponents = 3\n\
         folds = 5\nrepetitions = 2\nseed = 5\nmax_epochs = 100\nkernels = [\"linear\"]\n",
    )
    .unwrap();
    let out = mlkfhe(dir.path(), &["benchmark", "--config", "bench.toml", "--output-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Avg. rank"));
    let out_dir = dir.path().join("out");
    assert_eq!(records(&out_dir.join("results.csv")).len(), 61);
    let ranks = records(&out_dir.join("ranks.csv"));
    assert_eq!(ranks.iter().filter(|r| r[0] == "Avg. rank").count(), 3);
    let stats = records(&out_dir.join("stats.csv"));
    let wilcoxon: Vec<_> = stats.iter().filter(|r| r[0] == "wilcoxon").collect();
    assert_eq!(wilcoxon.len(), 2 * 3);
    assert!(wilcoxon.iter().all(|r| r[7] == "exact"));

    // Recomputing from results.csv reproduces the same report files.
    let out = mlkfhe(dir.path(), &["stats", "--results", "out/results.csv", "--control", "kfhe-cc", "--output-dir", "again"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["ranks.csv", "stats.csv", "cd_plot.csv"] {
        assert_eq!(records(&out_dir.join(file)), records(&dir.path().join("again").join(file)), "{file}");
    }
}
