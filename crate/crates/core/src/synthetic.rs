//! Seeded synthetic multi-label datasets with planted label structure.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub instances: usize,
    pub features: usize,
    pub labels: usize,
    /// Standard deviation of the noise added to each label's latent score.
    pub noise: f64,
    /// Added to a label's latent score when the previous label is on.
    pub coupling: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            instances: 200,
            features: 8,
            labels: 5,
            noise: 0.5,
            coupling: 1.5,
            seed: 0,
        }
    }
}

/// Gaussian features; label `j` fires when a random linear function of the
/// features, plus `coupling` if label `j - 1` fired, plus noise, exceeds 1.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.instances == 0 || spec.features == 0 || spec.labels == 0 {
        return Err(Error::invalid("synthetic dataset dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d, q) = (spec.instances, spec.features, spec.labels);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let w = Array2::from_shape_fn((q, d), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y = Array2::<u8>::zeros((n, q));
    for i in 0..n {
        for j in 0..q {
            let mut s = x.row(i).dot(&w.row(j));
            if j > 0 && y[[i, j - 1]] == 1 {
                s += spec.coupling;
            }
            s += spec.noise * rng.sample::<f64, _>(StandardNormal);
            y[[i, j]] = u8::from(s > 1.0);
        }
    }
    let names = (0..q).map(|j| format!("y{j}")).collect();
    Dataset::new(x, y, names)
}
