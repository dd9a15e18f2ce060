use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_input_dim, check_weights, ScoreModel};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::learner::{fit_binary, BinaryLearnerSpec, FittedBinaryModel};
use crate::seed::derive_seed;

/// One independent binary model per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRelevance {
    n_features: usize,
    models: Vec<FittedBinaryModel>,
}

impl BinaryRelevance {
    pub fn models(&self) -> &[FittedBinaryModel] {
        &self.models
    }
}

pub fn train_br(data: &Dataset, weights: &[f64], spec: &BinaryLearnerSpec) -> Result<BinaryRelevance> {
    check_weights(data.n_instances(), weights)?;
    let models = (0..data.n_labels())
        .map(|j| {
            let targets: Vec<u8> = data.label_column(j).to_vec();
            let spec = spec.clone().with_seed(derive_seed(spec.seed, j as u64));
            fit_binary(data.features(), &targets, weights, &spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryRelevance {
        n_features: data.n_features(),
        models,
    })
}

impl ScoreModel for BinaryRelevance {
    fn n_labels(&self) -> usize {
        self.models.len()
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input_dim(self.n_features, x)?;
        let mut out = Array2::zeros((x.nrows(), self.models.len()));
        for (j, m) in self.models.iter().enumerate() {
            out.column_mut(j).assign(&m.predict_scores(x)?);
        }
        Ok(out)
    }
}
