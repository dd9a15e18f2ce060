//! Component multi-label classifiers: binary relevance, classifier chains and HOMER.

mod br;
mod chain;
mod cluster;
mod homer;

pub use br::{train_br, BinaryRelevance};
pub use chain::{train_cc, ChainModel};
pub use cluster::{cluster_labels, ClusterMethod};
pub use homer::{train_homer, HomerNode, HomerParams, HomerTree};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Scores at or above this value mark a label relevant.
pub const RELEVANCE_THRESHOLD: f64 = 0.5;

/// A trained model mapping feature rows to per-label scores in `[0, 1]`.
pub trait ScoreModel {
    fn n_labels(&self) -> usize;

    fn n_features(&self) -> usize;

    /// Scores for every row of `x`, one column per label in dataset order.
    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>>;

    fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let m = self.predict_matrix(x.insert_axis(Axis(0)))?;
        Ok(m.row(0).to_owned())
    }
}

pub fn is_relevant(score: f64) -> bool {
    score >= RELEVANCE_THRESHOLD
}

pub fn threshold_scores(scores: ArrayView2<'_, f64>) -> Array2<u8> {
    scores.mapv(|s| u8::from(is_relevant(s)))
}

pub fn check_input_dim(expected: usize, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() == expected {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "model expects {expected} features, got {}",
            x.ncols()
        )))
    }
}

pub(crate) fn check_weights(n: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "{} instance weights for {n} instances",
            weights.len()
        )));
    }
    Ok(())
}
