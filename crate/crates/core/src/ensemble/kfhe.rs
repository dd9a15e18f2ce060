//! Boosting with two static Kalman filters.
//!
//! The model filter treats the ensemble's score matrix on the training data
//! as the state. Each new component contributes the measurement
//! `z = (h_t(D) + y_prev) / 2`, whose noise is the Hamming loss of `z`
//! thresholded at 0.5. The weight filter tracks the sampling distribution:
//! its measurement multiplies each weight by `exp(per-instance Hamming loss)`
//! of the updated ensemble, renormalised, and shares the model filter's noise.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::{Component, ComponentFamily, EnsembleSpec, Hyperparams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kalman::{kalman_gain, variance_update, StaticKalman};
use crate::metrics::{hamming_loss, per_instance_hamming};
use crate::models::{threshold_scores, ScoreModel};

/// Initial model plus gain-weighted components, replayed in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfheEnsemble<M> {
    pub initial: M,
    pub components: Vec<M>,
    pub gains: Vec<f64>,
}

fn measurement(component: ArrayView2<'_, f64>, estimate: &Array2<f64>) -> Array2<f64> {
    (&component + estimate) / 2.0
}

/// The fusion step shared by training and prediction.
fn fuse(estimate: &mut Array2<f64>, z: &Array2<f64>, gain: f64) {
    Zip::from(estimate).and(z).for_each(|e, &m| *e += gain * (m - *e));
}

impl<M> KfheEnsemble<M> {
    pub fn new(initial: M, components: Vec<M>, gains: Vec<f64>) -> Result<Self> {
        if components.len() != gains.len() {
            return Err(Error::invalid(format!(
                "{} components but {} gains",
                components.len(),
                gains.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::invalid(format!("gain {g} outside [0, 1]")));
        }
        Ok(Self { initial, components, gains })
    }
}

impl<M: ScoreModel> KfheEnsemble<M> {
    pub fn n_labels(&self) -> usize {
        self.initial.n_labels()
    }

    pub fn n_features(&self) -> usize {
        self.initial.n_features()
    }

    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut estimate = self.initial.predict_matrix(x)?;
        for (h, &gain) in self.components.iter().zip(&self.gains) {
            let z = measurement(h.predict_matrix(x)?.view(), &estimate);
            fuse(&mut estimate, &z, gain);
        }
        Ok(estimate)
    }
}

/// Filter state after one boosting iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub t: usize,
    /// Measurement noise shared by both filters.
    pub noise: f64,
    pub model_gain: f64,
    pub model_variance: f64,
    pub weight_gain: f64,
    pub weight_variance: f64,
    /// Hamming loss of the updated ensemble on the training data.
    pub train_hamming: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub trace: Vec<IterationTrace>,
    /// Training-time ensemble scores on the training data.
    pub estimate: Array2<f64>,
    /// Final sampling distribution.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KfheRun<M> {
    pub ensemble: KfheEnsemble<M>,
    pub report: TrainingReport,
}

/// The boosting loop with pluggable components.
///
/// `fit(t, weights)` must return the component for iteration `t` trained
/// under the current distribution `weights` (which sums to 1).
pub fn run_kfhe<M, F>(data: &Dataset, iterations: usize, initial: M, mut fit: F) -> Result<KfheRun<M>>
where
    M: ScoreModel,
    F: FnMut(usize, &[f64]) -> Result<M>,
{
    if iterations < 1 {
        return Err(Error::invalid("boosting needs at least one iteration (T >= 1)"));
    }
    let x = data.features();
    let y = data.labels();
    let n = data.n_instances();
    let mut estimate = initial.predict_matrix(x)?;
    if estimate.dim() != y.dim() {
        return Err(Error::invalid("initial component output does not match the label matrix"));
    }
    let mut weights = vec![1.0 / n as f64; n];
    let mut model_filter = StaticKalman::default();
    let mut weight_variance = 1.0;
    let mut components = Vec::with_capacity(iterations);
    let mut gains = Vec::with_capacity(iterations);
    let mut trace = Vec::with_capacity(iterations);

    for t in 1..=iterations {
        let h = fit(t, &weights)?;
        let z = measurement(h.predict_matrix(x)?.view(), &estimate);
        let noise = hamming_loss(y, threshold_scores(z.view()).view())?;
        let model_gain = kalman_gain(model_filter.p, noise)?;
        fuse(&mut estimate, &z, model_gain);
        model_filter.p = variance_update(model_filter.p, model_gain)?;

        let predicted = threshold_scores(estimate.view());
        let mut z_w = Vec::with_capacity(n);
        for i in 0..n {
            z_w.push(weights[i] * per_instance_hamming(y.row(i), predicted.row(i))?.exp());
        }
        normalise(&mut z_w);
        let weight_gain = kalman_gain(weight_variance, noise)?;
        for (w, m) in weights.iter_mut().zip(&z_w) {
            *w += weight_gain * (m - *w);
        }
        weight_variance = variance_update(weight_variance, weight_gain)?;
        normalise(&mut weights);

        trace.push(IterationTrace {
            t,
            noise,
            model_gain,
            model_variance: model_filter.p,
            weight_gain,
            weight_variance,
            train_hamming: hamming_loss(y, predicted.view())?,
        });
        components.push(h);
        gains.push(model_gain);
    }
    Ok(KfheRun {
        ensemble: KfheEnsemble::new(initial, components, gains)?,
        report: TrainingReport { trace, estimate, weights },
    })
}

/// Scales to unit sum; a vector with no usable mass becomes uniform.
fn normalise(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        w.iter_mut().for_each(|v| *v /= total);
    } else {
        log::warn!("weight vector degenerated (sum {total}); resetting to uniform");
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|v| *v = u);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfheModel {
    pub family: ComponentFamily,
    pub seed: u64,
    /// Configuration of the initial component followed by every later one.
    pub hyperparams: Vec<Hyperparams>,
    pub ensemble: KfheEnsemble<Component>,
}

impl ScoreModel for KfheModel {
    fn n_labels(&self) -> usize {
        self.ensemble.n_labels()
    }

    fn n_features(&self) -> usize {
        self.ensemble.n_features()
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.ensemble.predict_matrix(x)
    }
}

pub fn train_ml_kfhe(data: &Dataset, spec: &EnsembleSpec) -> Result<(KfheModel, TrainingReport)> {
    spec.validate(data)?;
    let (hp0, initial) = spec.fit_initial(data)?;
    let mut hyperparams = vec![hp0];
    let run = run_kfhe(data, spec.components, initial, |t, weights| {
        let (hp, model) = spec.fit_weighted(t, data, weights)?;
        log::debug!("component {t}: {hp:?}");
        hyperparams.push(hp);
        Ok(model)
    })?;
    let model = KfheModel {
        family: spec.family,
        seed: spec.seed,
        hyperparams,
        ensemble: run.ensemble,
    };
    Ok((model, run.report))
}
