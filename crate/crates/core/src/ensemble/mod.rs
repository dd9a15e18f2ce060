//! Ensembles of randomly configured HOMER or classifier-chain components:
//! Kalman-filter fused boosting and plain bagging.

mod bagged;
mod kfhe;

pub use bagged::{mean_scores, train_bagged, BaggedModel};
pub use kfhe::{run_kfhe, train_ml_kfhe, IterationTrace, KfheEnsemble, KfheModel, KfheRun, TrainingReport};

use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{BinaryLearnerSpec, Kernel};
use crate::models::{train_cc, train_homer, ChainModel, ClusterMethod, HomerParams, HomerTree, ScoreModel};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentFamily {
    Homer,
    Cc,
}

impl ComponentFamily {
    pub fn name(self) -> &'static str {
        match self {
            ComponentFamily::Homer => "homer",
            ComponentFamily::Cc => "cc",
        }
    }
}

/// How the boosting weights reach a component's fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMode {
    /// Fit on `2n` rows drawn with replacement from the weight distribution.
    #[default]
    Resample,
    /// Fit on the full data with the weights passed to the binary learner.
    Direct,
}

/// One component's random configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparams {
    Homer { clustering: ClusterMethod, k: usize, kernel: Kernel },
    Cc { order: Vec<usize>, kernel: Kernel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Component {
    Homer(HomerTree),
    Cc(ChainModel),
}

impl ScoreModel for Component {
    fn n_labels(&self) -> usize {
        match self {
            Component::Homer(m) => m.n_labels(),
            Component::Cc(m) => m.n_labels(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            Component::Homer(m) => m.n_features(),
            Component::Cc(m) => m.n_features(),
        }
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Component::Homer(m) => m.predict_matrix(x),
            Component::Cc(m) => m.predict_matrix(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: ComponentFamily,
    /// Components after the initial one.
    pub components: usize,
    pub weighting: WeightingMode,
    /// Template for every binary fit; the kernel is overridden per component.
    pub learner: BinaryLearnerSpec,
    /// Kernels a component may draw.
    pub kernels: Vec<Kernel>,
    /// Clustering methods a HOMER component may draw.
    pub clusterings: Vec<ClusterMethod>,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(family: ComponentFamily, components: usize, seed: u64) -> Self {
        Self {
            family,
            components,
            weighting: WeightingMode::default(),
            learner: BinaryLearnerSpec::default(),
            kernels: Kernel::ALL.to_vec(),
            clusterings: ClusterMethod::ALL.to_vec(),
            seed,
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if self.components < 1 {
            return Err(Error::invalid("an ensemble needs at least one component (T >= 1)"));
        }
        if self.kernels.is_empty() {
            return Err(Error::invalid("no kernels to draw from"));
        }
        if self.family == ComponentFamily::Homer {
            if self.clusterings.is_empty() {
                return Err(Error::invalid("no clustering methods to draw from"));
            }
            if data.n_labels() < 2 {
                return Err(Error::invalid("HOMER components need at least two labels"));
            }
        }
        self.learner.validate()
    }

    fn component_seed(&self, t: usize) -> u64 {
        derive_seed(self.seed, t as u64)
    }

    /// Random configuration of component `t`.
    pub fn draw(&self, t: usize, n_labels: usize) -> Hyperparams {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.component_seed(t), 0));
        let kernel = self.kernels[rng.random_range(0..self.kernels.len())];
        match self.family {
            ComponentFamily::Homer => {
                let clustering = self.clusterings[rng.random_range(0..self.clusterings.len())];
                let k = rng.random_range(2..=max_branching(n_labels));
                Hyperparams::Homer { clustering, k, kernel }
            }
            ComponentFamily::Cc => {
                let mut order: Vec<usize> = (0..n_labels).collect();
                order.shuffle(&mut rng);
                Hyperparams::Cc { order, kernel }
            }
        }
    }

    /// Fits component `t` with configuration `hp` on `data` weighted by `weights`.
    pub fn fit(&self, t: usize, hp: &Hyperparams, data: &Dataset, weights: &[f64]) -> Result<Component> {
        let fit_seed = derive_seed(self.component_seed(t), 2);
        match hp {
            Hyperparams::Homer { clustering, k, kernel } => {
                let params = HomerParams {
                    clustering: *clustering,
                    k: *k,
                    learner: self.learner.clone().with_kernel(*kernel),
                };
                Ok(Component::Homer(train_homer(data, weights, &params, fit_seed)?))
            }
            Hyperparams::Cc { order, kernel } => {
                let spec = self.learner.clone().with_kernel(*kernel).with_seed(fit_seed);
                Ok(Component::Cc(train_cc(data, weights, order, &spec)?))
            }
        }
    }

    /// Draws and fits component `t` under the configured weighting mode.
    fn fit_weighted(&self, t: usize, data: &Dataset, weights: &[f64]) -> Result<(Hyperparams, Component)> {
        match self.weighting {
            WeightingMode::Direct => {
                let hp = self.draw(t, data.n_labels());
                let model = self.fit(t, &hp, data, weights)?;
                Ok((hp, model))
            }
            WeightingMode::Resample => self.fit_resampled(t, data, weights),
        }
    }

    /// Draws and fits component `t` on `2n` rows drawn with replacement from `weights`.
    fn fit_resampled(&self, t: usize, data: &Dataset, weights: &[f64]) -> Result<(Hyperparams, Component)> {
        let hp = self.draw(t, data.n_labels());
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.component_seed(t), 1));
        let rows = weighted_bootstrap(weights, 2 * data.n_instances(), &mut rng)?;
        let sample = data.select(&rows)?;
        let model = self.fit(t, &hp, &sample, &vec![1.0; rows.len()])?;
        Ok((hp, model))
    }

    /// Component 0: drawn configuration, fitted on the full data with uniform weights.
    fn fit_initial(&self, data: &Dataset) -> Result<(Hyperparams, Component)> {
        let hp = self.draw(0, data.n_labels());
        let model = self.fit(0, &hp, data, &vec![1.0; data.n_instances()])?;
        Ok((hp, model))
    }
}

/// Largest HOMER branching factor drawn for `q` labels: `ceil(sqrt(q))`, at least 2.
pub fn max_branching(q: usize) -> usize {
    let mut r = 0;
    while r * r < q {
        r += 1;
    }
    r.max(2)
}

/// `size` indices drawn with replacement, proportional to `weights`.
pub fn weighted_bootstrap(weights: &[f64], size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("bad sampling weights: {e}")))?;
    Ok((0..size).map(|_| dist.sample(rng)).collect())
}
