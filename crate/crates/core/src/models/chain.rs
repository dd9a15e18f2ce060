use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_input_dim, check_weights, is_relevant, ScoreModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{fit_binary, BinaryLearnerSpec, FittedBinaryModel};
use crate::seed::derive_seed;

/// Binary models linked in a fixed label order; position `l` sees the
/// original features followed by the `l` labels earlier in the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    n_features: usize,
    order: Vec<usize>,
    links: Vec<FittedBinaryModel>,
}

impl ChainModel {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn links(&self) -> &[FittedBinaryModel] {
        &self.links
    }
}

fn check_permutation(order: &[usize], q: usize) -> Result<()> {
    let mut seen = vec![false; q];
    if order.len() != q {
        return Err(Error::invalid(format!("chain order has {} entries for {q} labels", order.len())));
    }
    for &l in order {
        if l >= q || std::mem::replace(&mut seen[l], true) {
            return Err(Error::invalid(format!("chain order {order:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Trains a chain following `order`. Earlier links feed ground-truth labels
/// to later ones during training.
pub fn train_cc(
    data: &Dataset,
    weights: &[f64],
    order: &[usize],
    spec: &BinaryLearnerSpec,
) -> Result<ChainModel> {
    check_weights(data.n_instances(), weights)?;
    check_permutation(order, data.n_labels())?;
    let n = data.n_instances();
    let mut augmented = data.features().to_owned();
    let mut links = Vec::with_capacity(order.len());
    for (pos, &label) in order.iter().enumerate() {
        let targets: Vec<u8> = data.label_column(label).to_vec();
        let link_spec = spec.clone().with_seed(derive_seed(spec.seed, pos as u64));
        links.push(fit_binary(augmented.view(), &targets, weights, &link_spec)?);
        let truth = data.label_column(label).mapv(f64::from).into_shape_with_order((n, 1)).expect("column");
        augmented = concatenate![Axis(1), augmented, truth];
    }
    Ok(ChainModel {
        n_features: data.n_features(),
        order: order.to_vec(),
        links,
    })
}

impl ScoreModel for ChainModel {
    fn n_labels(&self) -> usize {
        self.order.len()
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Walks the chain, feeding each thresholded prediction forward. Returns
    /// raw scores in dataset label order.
    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input_dim(self.n_features, x)?;
        let n = x.nrows();
        let mut out = Array2::zeros((n, self.order.len()));
        let mut augmented = x.to_owned();
        for (&label, link) in self.order.iter().zip(&self.links) {
            let scores = link.predict_scores(augmented.view())?;
            let hard = scores
                .mapv(|s| f64::from(u8::from(is_relevant(s))))
                .into_shape_with_order((n, 1))
                .expect("column");
            out.column_mut(label).assign(&scores);
            augmented = concatenate![Axis(1), augmented, hard];
        }
        Ok(out)
    }
}
