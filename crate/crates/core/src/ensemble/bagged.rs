use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Component, ComponentFamily, EnsembleSpec, Hyperparams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::ScoreModel;

/// Component 0 fitted on the full data, the rest on uniform bootstrap samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub family: ComponentFamily,
    pub seed: u64,
    pub hyperparams: Vec<Hyperparams>,
    pub components: Vec<Component>,
}

/// Elementwise mean of the components' score matrices.
pub fn mean_scores<M: ScoreModel>(components: &[M], x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (first, rest) = components
        .split_first()
        .ok_or_else(|| Error::invalid("ensemble has no components"))?;
    let mut sum = first.predict_matrix(x)?;
    for h in rest {
        sum += &h.predict_matrix(x)?;
    }
    Ok(sum / components.len() as f64)
}

impl ScoreModel for BaggedModel {
    fn n_labels(&self) -> usize {
        self.components[0].n_labels()
    }

    fn n_features(&self) -> usize {
        self.components[0].n_features()
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        mean_scores(&self.components, x)
    }
}

/// Trains `spec.components + 1` independently configured components in parallel.
pub fn train_bagged(data: &Dataset, spec: &EnsembleSpec) -> Result<BaggedModel> {
    spec.validate(data)?;
    let uniform = vec![1.0; data.n_instances()];
    let fitted = (0..=spec.components)
        .into_par_iter()
        .map(|t| {
            if t == 0 {
                return spec.fit_initial(data);
            }
            spec.fit_resampled(t, data, &uniform)
        })
        .collect::<Result<Vec<_>>>()?;
    let (hyperparams, components) = fitted.into_iter().unzip();
    Ok(BaggedModel {
        family: spec.family,
        seed: spec.seed,
        hyperparams,
        components,
    })
}
