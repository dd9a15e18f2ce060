//! Weighted binary probabilistic classifiers.
//!
//! Every multi-label model in the crate decomposes into binary problems and
//! hands them to [`fit_binary`]. The learner is an L2-regularised logistic
//! regression trained by full-batch gradient descent. With
//! [`Kernel::Radial`] the inputs first pass through a seeded random Fourier
//! feature map approximating `exp(-gamma * |x - x'|^2)`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Radial,
}

impl Kernel {
    pub const ALL: [Kernel; 2] = [Kernel::Linear, Kernel::Radial];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Radial => "radial",
        }
    }
}

/// Hyperparameters of one binary fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLearnerSpec {
    pub kernel: Kernel,
    /// L2 penalty on the weight vector (the bias is not penalised).
    pub lambda: f64,
    /// Number of random Fourier features for the radial kernel.
    pub rff_dim: usize,
    /// Radial bandwidth `gamma`; `None` means `1 / d`.
    pub rff_bandwidth: Option<f64>,
    pub max_epochs: usize,
    /// Multiplier on the `1 / L` step, where `L` bounds the loss curvature.
    pub learning_rate: f64,
    /// Step at epoch `t` is `eta0 / (1 + step_decay * t)`.
    pub step_decay: f64,
    /// Stop once the loss changes by less than this between epochs.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for BinaryLearnerSpec {
    fn default() -> Self {
        Self {
            kernel: Kernel::Linear,
            lambda: 1e-3,
            rff_dim: 256,
            rff_bandwidth: None,
            max_epochs: 500,
            learning_rate: 1.0,
            step_decay: 1e-3,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl BinaryLearnerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::invalid("lambda must be positive"));
        }
        if self.kernel == Kernel::Radial && self.rff_dim == 0 {
            return Err(Error::invalid("rff_dim must be positive for the radial kernel"));
        }
        if let Some(g) = self.rff_bandwidth {
            if !(g > 0.0) {
                return Err(Error::invalid("rff_bandwidth must be positive"));
            }
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.step_decay >= 0.0) || !(self.tolerance >= 0.0) {
            return Err(Error::invalid("invalid step schedule"));
        }
        Ok(())
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Random Fourier features: `z(x) = sqrt(2/D) cos(W x + b)` with
/// `W ~ N(0, 2 gamma I)` and `b ~ U[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFourierMap {
    projection: Array2<f64>,
    phase: Array1<f64>,
    scale: f64,
}

impl RandomFourierMap {
    pub fn new(input_dim: usize, dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if dim == 0 || !(gamma > 0.0) {
            return Err(Error::invalid("random feature map needs dim > 0 and gamma > 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (2.0 * gamma).sqrt())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let projection = Array2::from_shape_simple_fn((dim, input_dim), || normal.sample(&mut rng));
        let uniform = Uniform::new(0.0, 2.0 * PI).map_err(|e| Error::invalid(e.to_string()))?;
        let phase = Array1::from_shape_simple_fn(dim, || uniform.sample(&mut rng));
        Ok(Self {
            projection,
            phase,
            scale: (2.0 / dim as f64).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.projection.t());
        z += &self.phase;
        z.mapv_inplace(|v| self.scale * v.cos());
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMap {
    Identity,
    RandomFourier(RandomFourierMap),
}

impl FeatureMap {
    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            FeatureMap::Identity => x.to_owned(),
            FeatureMap::RandomFourier(m) => m.transform(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedBinaryModel {
    /// Emits the same score for every input.
    Constant { input_dim: usize, score: f64 },
    Logistic {
        input_dim: usize,
        map: FeatureMap,
        weights: Array1<f64>,
        bias: f64,
    },
}

impl FittedBinaryModel {
    pub fn constant(input_dim: usize, score: f64) -> Self {
        FittedBinaryModel::Constant { input_dim, score }
    }

    /// A linear model on the raw inputs.
    pub fn linear(weights: Array1<f64>, bias: f64) -> Self {
        FittedBinaryModel::Logistic {
            input_dim: weights.len(),
            map: FeatureMap::Identity,
            weights,
            bias,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedBinaryModel::Constant { input_dim, .. }
            | FittedBinaryModel::Logistic { input_dim, .. } => *input_dim,
        }
    }

    pub fn predict_score(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let row = x.insert_axis(Axis(0));
        Ok(self.predict_scores(row)?[0])
    }

    /// Scores for every row of `x`.
    pub fn predict_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!(
                "model expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        match self {
            FittedBinaryModel::Constant { score, .. } => Ok(Array1::from_elem(x.nrows(), *score)),
            FittedBinaryModel::Logistic {
                map, weights, bias, ..
            } => {
                let z = map.apply(x);
                let mut s = z.dot(weights);
                s.mapv_inplace(|v| sigmoid(v + bias));
                Ok(s)
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^v)` without overflow.
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Weighted mean logistic loss plus `lambda/2 |w|^2`, over already-mapped features.
///
/// Instance weights are normalised to sum to one, so scaling all of them by a
/// constant leaves the objective unchanged.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    features: ArrayView2<'a, f64>,
    targets: Array1<f64>,
    weights: Array1<f64>,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(
        features: ArrayView2<'a, f64>,
        targets: &[u8],
        instance_weights: &[f64],
        lambda: f64,
    ) -> Result<Self> {
        let n = features.nrows();
        if targets.len() != n || instance_weights.len() != n {
            return Err(Error::invalid(format!(
                "{} rows, {} targets, {} weights",
                n,
                targets.len(),
                instance_weights.len()
            )));
        }
        let total = checked_weight_total(instance_weights)?;
        Ok(Self {
            features,
            targets: targets.iter().map(|&t| f64::from(t)).collect(),
            weights: instance_weights.iter().map(|&w| w / total).collect(),
            lambda,
        })
    }

    fn margins(&self, w: &Array1<f64>, b: f64) -> Array1<f64> {
        let mut s = self.features.dot(w);
        s += b;
        s
    }

    pub fn loss(&self, w: &Array1<f64>, b: f64) -> f64 {
        let s = self.margins(w, b);
        self.loss_from_margins(&s, w)
    }

    fn loss_from_margins(&self, s: &Array1<f64>, w: &Array1<f64>) -> f64 {
        let data: f64 = s
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((&m, &y), &wt)| wt * (softplus(m) - y * m))
            .sum();
        data + 0.5 * self.lambda * w.dot(w)
    }

    /// Loss and its gradient with respect to `(w, b)`.
    pub fn loss_and_gradient(&self, w: &Array1<f64>, b: f64) -> (f64, Array1<f64>, f64) {
        let s = self.margins(w, b);
        let loss = self.loss_from_margins(&s, w);
        let residual: Array1<f64> = s
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((&m, &y), &wt)| wt * (sigmoid(m) - y))
            .collect();
        let mut grad_w = self.features.t().dot(&residual);
        grad_w.scaled_add(self.lambda, w);
        (loss, grad_w, residual.sum())
    }

    /// Upper bound on the Hessian's largest eigenvalue.
    fn curvature_bound(&self) -> f64 {
        let spread: f64 = self
            .features
            .rows()
            .into_iter()
            .zip(&self.weights)
            .map(|(row, &wt)| wt * (row.dot(&row) + 1.0))
            .sum();
        0.25 * spread + self.lambda
    }
}

fn checked_weight_total(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("instance weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("instance weights sum to zero"));
    }
    Ok(total)
}

/// Fits a weighted binary classifier.
///
/// If every positively weighted instance has the same target the result is a
/// constant model emitting that class (its weighted prior).
pub fn fit_binary(
    features: ArrayView2<'_, f64>,
    targets: &[u8],
    instance_weights: &[f64],
    spec: &BinaryLearnerSpec,
) -> Result<FittedBinaryModel> {
    spec.validate()?;
    let n = features.nrows();
    let d = features.ncols();
    if n == 0 {
        return Err(Error::invalid("cannot fit on zero instances"));
    }
    if targets.len() != n || instance_weights.len() != n {
        return Err(Error::invalid(format!(
            "{} rows, {} targets, {} weights",
            n,
            targets.len(),
            instance_weights.len()
        )));
    }
    if targets.iter().any(|&t| t > 1) {
        return Err(Error::invalid("binary targets must be 0 or 1"));
    }
    let total = checked_weight_total(instance_weights)?;
    let positive: f64 = targets
        .iter()
        .zip(instance_weights)
        .filter(|(&t, _)| t == 1)
        .map(|(_, &w)| w)
        .sum();
    let prior = positive / total;
    let has_both = targets
        .iter()
        .zip(instance_weights)
        .filter(|(_, &w)| w > 0.0)
        .fold([false, false], |mut acc, (&t, _)| {
            acc[usize::from(t)] = true;
            acc
        });
    if !(has_both[0] && has_both[1]) {
        return Ok(FittedBinaryModel::constant(d, prior));
    }

    let map = match spec.kernel {
        Kernel::Linear => FeatureMap::Identity,
        Kernel::Radial => {
            let gamma = spec.rff_bandwidth.unwrap_or(1.0 / d.max(1) as f64);
            FeatureMap::RandomFourier(RandomFourierMap::new(d, spec.rff_dim, gamma, spec.seed)?)
        }
    };
    let mapped = map.apply(features);
    let objective = LogisticObjective::new(mapped.view(), targets, instance_weights, spec.lambda)?;
    let (weights, bias) = gradient_descent(&objective, spec, prior);
    Ok(FittedBinaryModel::Logistic {
        input_dim: d,
        map,
        weights,
        bias,
    })
}

/// Nesterov-accelerated gradient descent with function-value restarts: the
/// momentum is dropped whenever a step increases the loss.
fn gradient_descent(
    objective: &LogisticObjective<'_>,
    spec: &BinaryLearnerSpec,
    prior: f64,
) -> (Array1<f64>, f64) {
    let mut w = Array1::zeros(objective.features.ncols());
    // Starting from the log-odds of the prior saves the epochs spent learning the bias.
    let mut b = (prior / (1.0 - prior)).ln();
    let (mut yw, mut yb) = (w.clone(), b);
    let mut theta = 1.0f64;
    let eta0 = spec.learning_rate / objective.curvature_bound();
    let mut previous = f64::INFINITY;
    for epoch in 0..spec.max_epochs {
        let (_, grad_w, grad_b) = objective.loss_and_gradient(&yw, yb);
        let eta = eta0 / (1.0 + spec.step_decay * epoch as f64);
        let mut next_w = yw.clone();
        next_w.scaled_add(-eta, &grad_w);
        let next_b = yb - eta * grad_b;
        let loss = objective.loss(&next_w, next_b);
        if loss > previous {
            // Restart from the last iterate without momentum.
            theta = 1.0;
            yw.assign(&w);
            yb = b;
            continue;
        }
        let converged = previous - loss < spec.tolerance;
        let next_theta = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / next_theta;
        yw = &next_w + &((&next_w - &w) * momentum);
        yb = next_b + momentum * (next_b - b);
        w = next_w;
        b = next_b;
        theta = next_theta;
        previous = loss;
        if converged {
            break;
        }
    }
    (w, b)
}
