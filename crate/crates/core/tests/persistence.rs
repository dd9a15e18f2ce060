use mlkfhe_core::algorithm::{train, Algorithm, TrainSettings};
use mlkfhe_core::error::Error;
use mlkfhe_core::models::ScoreModel;
use mlkfhe_core::persist::ModelFile;
use mlkfhe_core::synthetic::{generate, SyntheticSpec};

fn settings() -> TrainSettings {
    let mut s = TrainSettings { components: 3, ..TrainSettings::default() };
    s.learner.max_epochs = 80;
    s.learner.rff_dim = 16;
    s
}

#[test]
fn every_algorithm_round_trips_bit_identically() {
    let data = generate(&SyntheticSpec { instances: 50, features: 3, labels: 4, seed: 12, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for alg in Algorithm::ALL {
        let (model, report) = train(alg, &data, &settings(), 5).unwrap();
        assert_eq!(report.is_some(), matches!(alg, Algorithm::KfheHomer | Algorithm::KfheCc));
        let names: Vec<String> = data.feature_sources().iter().map(|s| s.column_name()).collect();
        let file = ModelFile::new(alg, 5, names, data.label_names().to_vec(), model).unwrap();
        let path = dir.path().join(format!("{alg}.json"));
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        assert_eq!(loaded.algorithm, alg);
        let before = file.model.predict_matrix(data.features()).unwrap();
        let after = loaded.model.predict_matrix(data.features()).unwrap();
        assert!(
            before.iter().zip(after.iter()).all(|(a, b)| a.to_bits() == b.to_bits()),
            "{alg} predictions changed after reload"
        );
        // Saving the loaded model reproduces the file byte for byte.
        assert_eq!(loaded.to_json().unwrap(), file.to_json().unwrap());
    }
}

#[test]
fn rejects_foreign_or_future_files() {
    assert!(matches!(ModelFile::from_json("{}"), Err(Error::Format(_))));
    assert!(matches!(
        ModelFile::from_json(r#"{"format":"other","version":1}"#),
        Err(Error::Format(_))
    ));
    assert!(matches!(
        ModelFile::from_json(r#"{"format":"mlkfhe-model","version":99}"#),
        Err(Error::Format(_))
    ));
    assert!(ModelFile::from_json("not json").is_err());
}

#[test]
fn names_must_match_model() {
    let data = generate(&SyntheticSpec { instances: 20, labels: 2, ..Default::default() }).unwrap();
    let (model, _) = train(Algorithm::Prior, &data, &settings(), 0).unwrap();
    assert!(ModelFile::new(Algorithm::Prior, 0, vec!["a".into()], data.label_names().to_vec(), model).is_err());
}
