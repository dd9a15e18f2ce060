//! Named learning algorithms behind one train/predict interface.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::ensemble::{
    train_bagged, train_ml_kfhe, BaggedModel, Component, ComponentFamily, EnsembleSpec, Hyperparams, KfheEnsemble, KfheModel,
    TrainingReport, WeightingMode,
};
use crate::error::{Error, Result};
use crate::learner::{BinaryLearnerSpec, Kernel};
use crate::models::{check_input_dim, train_br, BinaryRelevance, ClusterMethod, ScoreModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    KfheHomer,
    KfheCc,
    EHomer,
    Ecc,
    Homer,
    Cc,
    Br,
    /// Predicts each label's training prevalence for every instance.
    Prior,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::KfheHomer,
        Algorithm::KfheCc,
        Algorithm::EHomer,
        Algorithm::Ecc,
        Algorithm::Homer,
        Algorithm::Cc,
        Algorithm::Br,
        Algorithm::Prior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KfheHomer => "kfhe-homer",
            Algorithm::KfheCc => "kfhe-cc",
            Algorithm::EHomer => "e-homer",
            Algorithm::Ecc => "ecc",
            Algorithm::Homer => "homer",
            Algorithm::Cc => "cc",
            Algorithm::Br => "br",
            Algorithm::Prior => "prior",
        }
    }

    pub fn family(self) -> Option<ComponentFamily> {
        match self {
            Algorithm::KfheHomer | Algorithm::EHomer | Algorithm::Homer => Some(ComponentFamily::Homer),
            Algorithm::KfheCc | Algorithm::Ecc | Algorithm::Cc => Some(ComponentFamily::Cc),
            Algorithm::Br | Algorithm::Prior => None,
        }
    }

    pub fn is_ensemble(self) -> bool {
        matches!(self, Algorithm::KfheHomer | Algorithm::KfheCc | Algorithm::EHomer | Algorithm::Ecc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::invalid(format!("unknown algorithm {s:?} (expected one of {})", known.join(", ")))
            })
    }
}

/// Settings shared by every algorithm in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    /// Ensemble size `T` (components after the initial one).
    pub components: usize,
    pub weighting: WeightingMode,
    pub learner: BinaryLearnerSpec,
    pub kernels: Vec<Kernel>,
    pub clusterings: Vec<ClusterMethod>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            components: 10,
            weighting: WeightingMode::default(),
            learner: BinaryLearnerSpec::default(),
            kernels: Kernel::ALL.to_vec(),
            clusterings: ClusterMethod::ALL.to_vec(),
        }
    }
}

impl TrainSettings {
    pub fn ensemble_spec(&self, family: ComponentFamily, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            family,
            components: self.components,
            weighting: self.weighting,
            learner: self.learner.clone(),
            kernels: self.kernels.clone(),
            clusterings: self.clusterings.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    n_features: usize,
    prevalence: Array1<f64>,
}

impl PriorModel {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.n_instances() as f64;
        Self {
            n_features: data.n_features(),
            prevalence: data.label_counts().iter().map(|&c| c as f64 / n).collect(),
        }
    }
}

impl ScoreModel for PriorModel {
    fn n_labels(&self) -> usize {
        self.prevalence.len()
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input_dim(self.n_features, x)?;
        Ok(Array2::from_shape_fn((x.nrows(), self.prevalence.len()), |(_, j)| self.prevalence[j]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Kfhe(KfheModel),
    Bagged(BaggedModel),
    Single { hyperparams: Hyperparams, component: Component },
    Br(BinaryRelevance),
    Prior(PriorModel),
}

impl TrainedModel {
    /// Structural checks for models that did not come from `train`.
    pub fn validate(&self) -> Result<()> {
        let components: Vec<&Component> = match self {
            TrainedModel::Kfhe(m) => {
                KfheEnsemble::new((), vec![(); m.ensemble.components.len()], m.ensemble.gains.clone())?;
                std::iter::once(&m.ensemble.initial).chain(&m.ensemble.components).collect()
            }
            TrainedModel::Bagged(m) => {
                if m.components.is_empty() {
                    return Err(Error::invalid("bagged model has no components"));
                }
                m.components.iter().collect()
            }
            TrainedModel::Single { component, .. } => vec![component],
            TrainedModel::Br(_) | TrainedModel::Prior(_) => Vec::new(),
        };
        let (d, q) = (components.first().map(|c| c.n_features()), components.first().map(|c| c.n_labels()));
        for c in &components {
            if Some(c.n_features()) != d || Some(c.n_labels()) != q {
                return Err(Error::invalid("components disagree on input or label dimensions"));
            }
            if let Component::Homer(tree) = c {
                tree.validate()?;
            }
        }
        Ok(())
    }
}

impl ScoreModel for TrainedModel {
    fn n_labels(&self) -> usize {
        match self {
            TrainedModel::Kfhe(m) => m.n_labels(),
            TrainedModel::Bagged(m) => m.n_labels(),
            TrainedModel::Single { component, .. } => component.n_labels(),
            TrainedModel::Br(m) => m.n_labels(),
            TrainedModel::Prior(m) => m.n_labels(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            TrainedModel::Kfhe(m) => m.n_features(),
            TrainedModel::Bagged(m) => m.n_features(),
            TrainedModel::Single { component, .. } => component.n_features(),
            TrainedModel::Br(m) => m.n_features(),
            TrainedModel::Prior(m) => m.n_features(),
        }
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            TrainedModel::Kfhe(m) => m.predict_matrix(x),
            TrainedModel::Bagged(m) => m.predict_matrix(x),
            TrainedModel::Single { component, .. } => component.predict_matrix(x),
            TrainedModel::Br(m) => m.predict_matrix(x),
            TrainedModel::Prior(m) => m.predict_matrix(x),
        }
    }
}

/// Trains `algorithm`; boosting runs also return their per-iteration report.
///
/// A single HOMER or CC model uses the same random configuration and seed as
/// the initial component of the matching ensemble.
pub fn train(
    algorithm: Algorithm,
    data: &Dataset,
    settings: &TrainSettings,
    seed: u64,
) -> Result<(TrainedModel, Option<TrainingReport>)> {
    let spec = algorithm.family().map(|f| settings.ensemble_spec(f, seed));
    match (algorithm, spec) {
        (Algorithm::KfheHomer | Algorithm::KfheCc, Some(spec)) => {
            let (model, report) = train_ml_kfhe(data, &spec)?;
            Ok((TrainedModel::Kfhe(model), Some(report)))
        }
        (Algorithm::EHomer | Algorithm::Ecc, Some(spec)) => Ok((TrainedModel::Bagged(train_bagged(data, &spec)?), None)),
        (Algorithm::Homer | Algorithm::Cc, Some(spec)) => {
            spec.validate(data)?;
            let hyperparams = spec.draw(0, data.n_labels());
            let component = spec.fit(0, &hyperparams, data, &vec![1.0; data.n_instances()])?;
            Ok((TrainedModel::Single { hyperparams, component }, None))
        }
        (Algorithm::Br, _) => {
            let learner = settings.learner.clone().with_seed(seed);
            Ok((TrainedModel::Br(train_br(data, &vec![1.0; data.n_instances()], &learner)?), None))
        }
        (Algorithm::Prior, _) => Ok((TrainedModel::Prior(PriorModel::fit(data)), None)),
        _ => unreachable!("every component-based algorithm has a family"),
    }
}
