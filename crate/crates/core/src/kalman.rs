//! Measurement-update-only Kalman filter over a static state.
//!
//! The state being estimated never moves, so there is no time update: every
//! step blends the current estimate with a fresh noisy measurement using a
//! single scalar variance `p`. Both the model filter (which fuses component
//! score matrices) and the weight filter (which tracks the resampling
//! distribution) are instances of [`StaticKalman`].

use ndarray::{ArrayView, Dimension, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this total variance the gain is defined as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// `k = p / (p + r)`.
///
/// A zero-variance state paired with a noiseless measurement has nothing to
/// correct, so the gain is 0 whenever `p + r < 1e-12`.
pub fn kalman_gain(p: f64, r: f64) -> Result<f64> {
    if !(p >= 0.0) || !(r >= 0.0) {
        return Err(Error::invalid(format!(
            "kalman gain needs nonnegative variances, got p={p}, r={r}"
        )));
    }
    if p + r < DEGENERATE_VARIANCE {
        return Ok(0.0);
    }
    Ok(p / (p + r))
}

/// Elementwise `prev + k (z - prev)`.
pub fn measurement_update<D: Dimension>(
    prev: ArrayView<'_, f64, D>,
    z: ArrayView<'_, f64, D>,
    k: f64,
) -> Result<ndarray::Array<f64, D>> {
    check_gain(k)?;
    if prev.shape() != z.shape() {
        return Err(Error::invalid(format!(
            "measurement shape {:?} does not match estimate shape {:?}",
            z.shape(),
            prev.shape()
        )));
    }
    Ok(Zip::from(&prev)
        .and(&z)
        .map_collect(|&a, &b| blend(a, b, k)))
}

/// `(1 - k) p`.
pub fn variance_update(p: f64, k: f64) -> Result<f64> {
    check_gain(k)?;
    if !(p >= 0.0) {
        return Err(Error::invalid(format!("variance must be nonnegative, got {p}")));
    }
    Ok((1.0 - k) * p)
}

#[inline]
pub(crate) fn blend(prev: f64, z: f64, k: f64) -> f64 {
    prev + k * (z - prev)
}

fn check_gain(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("kalman gain must lie in [0, 1], got {k}")))
    }
}

/// Scalar-variance filter around a static state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticKalman {
    /// Estimate variance.
    pub p: f64,
}

/// Outcome of one measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStep {
    pub gain: f64,
    pub variance: f64,
}

impl Default for StaticKalman {
    /// Maximum uncertainty.
    fn default() -> Self {
        Self { p: 1.0 }
    }
}

impl StaticKalman {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 0.0) {
            return Err(Error::invalid(format!("variance must be nonnegative, got {p}")));
        }
        Ok(Self { p })
    }

    /// Fuses `measurement` (noise `r`) into `estimate` in place and shrinks `p`.
    pub fn update<D: Dimension>(
        &mut self,
        estimate: &mut ndarray::Array<f64, D>,
        measurement: ArrayView<'_, f64, D>,
        r: f64,
    ) -> Result<UpdateStep> {
        let gain = kalman_gain(self.p, r)?;
        if estimate.shape() != measurement.shape() {
            return Err(Error::invalid(format!(
                "measurement shape {:?} does not match estimate shape {:?}",
                measurement.shape(),
                estimate.shape()
            )));
        }
        Zip::from(estimate)
            .and(&measurement)
            .for_each(|e, &z| *e = blend(*e, z, gain));
        self.p = variance_update(self.p, gain)?;
        Ok(UpdateStep {
            gain,
            variance: self.p,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn gain_examples() {
        assert_eq!(kalman_gain(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(kalman_gain(0.5, 0.0).unwrap(), 1.0);
        assert!((kalman_gain(1.0, 0.25).unwrap() - 0.8).abs() < TOL);
    }

    #[test]
    fn gain_degenerate_is_zero() {
        assert_eq!(kalman_gain(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(kalman_gain(1e-13, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gain_rejects_negative() {
        assert!(kalman_gain(-0.1, 1.0).is_err());
        assert!(kalman_gain(1.0, -1e-9).is_err());
        assert!(kalman_gain(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn update_examples() {
        let out = measurement_update(arr1(&[0.2]).view(), arr1(&[0.8]).view(), 0.5).unwrap();
        assert!((out[0] - 0.5).abs() < TOL);
        let out = measurement_update(arr1(&[0.0]).view(), arr1(&[0.5]).view(), 0.8).unwrap();
        assert!((out[0] - 0.4).abs() < TOL);
        let x = arr2(&[[0.3, 0.9], [0.1, 0.0]]);
        for k in [0.0, 0.37, 1.0] {
            assert_eq!(measurement_update(x.view(), x.view(), k).unwrap(), x);
        }
    }

    #[test]
    fn update_rejects_shape_mismatch_and_bad_gain() {
        let a = arr1(&[0.1, 0.2]);
        let b = arr1(&[0.1, 0.2, 0.3]);
        assert!(measurement_update(a.view(), b.view(), 0.5).is_err());
        assert!(measurement_update(a.view(), a.view(), 1.5).is_err());
    }

    #[test]
    fn variance_examples() {
        assert!((variance_update(1.0, 0.5).unwrap() - 0.5).abs() < TOL);
        assert_eq!(variance_update(0.7, 0.0).unwrap(), 0.7);
        assert!((variance_update(1.0, 0.8).unwrap() - 0.2).abs() < TOL);
        assert!(variance_update(1.0, -0.1).is_err());
    }

    #[test]
    fn filter_step_matches_free_functions() {
        let mut f = StaticKalman::default();
        let mut est = arr1(&[0.0, 1.0]);
        let step = f.update(&mut est, arr1(&[1.0, 1.0]).view(), 0.25).unwrap();
        assert!((step.gain - 0.8).abs() < TOL);
        assert!((f.p - 0.2).abs() < TOL);
        assert!((est[0] - 0.8).abs() < TOL);
        assert_eq!(est[1], 1.0);
    }

    proptest! {
        #[test]
        fn gain_in_unit_interval(p in 0.0f64..10.0, r in 0.0f64..10.0) {
            let k = kalman_gain(p, r).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
            prop_assert!(variance_update(p, k).unwrap() <= p);
        }

        #[test]
        fn more_accurate_measurement_gets_more_gain(p in 1e-3f64..1.0, r1 in 0.0f64..1.0, dr in 1e-6f64..1.0) {
            prop_assert!(kalman_gain(p, r1).unwrap() > kalman_gain(p, r1 + dr).unwrap());
        }

        #[test]
        fn update_is_convex(prev in 0.0f64..1.0, z in 0.0f64..1.0, k in 0.0f64..=1.0) {
            let out = measurement_update(arr1(&[prev]).view(), arr1(&[z]).view(), k).unwrap()[0];
            prop_assert!(out >= prev.min(z) - 1e-15 && out <= prev.max(z) + 1e-15);
        }
    }
}
