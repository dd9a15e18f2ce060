//! In-memory multi-label dataset.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where an encoded feature column came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSource {
    Numeric { attribute: String },
    /// One column of a one-hot encoded nominal attribute.
    OneHot { attribute: String, value: String },
}

impl FeatureSource {
    pub fn attribute(&self) -> &str {
        match self {
            FeatureSource::Numeric { attribute } | FeatureSource::OneHot { attribute, .. } => {
                attribute
            }
        }
    }

    pub fn column_name(&self) -> String {
        match self {
            FeatureSource::Numeric { attribute } => attribute.clone(),
            FeatureSource::OneHot { attribute, value } => format!("{attribute}={value}"),
        }
    }
}

/// `n x d` features plus an `n x q` binary label matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array2<u8>,
    label_names: Vec<String>,
    feature_sources: Vec<FeatureSource>,
}

impl Dataset {
    /// Builds a dataset with numeric features named `x0..x{d-1}`.
    pub fn new(features: Array2<f64>, labels: Array2<u8>, label_names: Vec<String>) -> Result<Self> {
        let sources = (0..features.ncols())
            .map(|j| FeatureSource::Numeric {
                attribute: format!("x{j}"),
            })
            .collect();
        Self::with_sources(features, labels, label_names, sources)
    }

    pub fn with_sources(
        features: Array2<f64>,
        labels: Array2<u8>,
        label_names: Vec<String>,
        feature_sources: Vec<FeatureSource>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::invalid("dataset has no instances"));
        }
        if labels.nrows() != n {
            return Err(Error::invalid(format!(
                "{} feature rows but {} label rows",
                n,
                labels.nrows()
            )));
        }
        if labels.ncols() == 0 {
            return Err(Error::invalid("dataset has no labels"));
        }
        if label_names.len() != labels.ncols() {
            return Err(Error::invalid(format!(
                "{} label names for {} label columns",
                label_names.len(),
                labels.ncols()
            )));
        }
        if feature_sources.len() != features.ncols() {
            return Err(Error::invalid("feature metadata does not match feature columns"));
        }
        let mut seen = HashSet::new();
        for name in &label_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate label name {name:?}")));
            }
        }
        if labels.iter().any(|&v| v > 1) {
            return Err(Error::invalid("label matrix must be binary"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Self {
            features,
            labels,
            label_names,
            feature_sources,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> ArrayView2<'_, u8> {
        self.labels.view()
    }

    pub fn label_column(&self, j: usize) -> ArrayView1<'_, u8> {
        self.labels.column(j)
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_sources(&self) -> &[FeatureSource] {
        &self.feature_sources
    }

    /// Number of distinct input attributes before one-hot expansion.
    pub fn n_attributes(&self) -> usize {
        let mut seen = HashSet::new();
        self.feature_sources
            .iter()
            .filter(|s| seen.insert(s.attribute()))
            .count()
    }

    /// Rows at `indices`, in order, duplicates allowed.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("cannot select an empty subset"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_instances()) {
            return Err(Error::invalid(format!(
                "row index {bad} out of range for {} instances",
                self.n_instances()
            )));
        }
        Ok(Self {
            features: self.features.select(Axis(0), indices),
            labels: self.labels.select(Axis(0), indices),
            label_names: self.label_names.clone(),
            feature_sources: self.feature_sources.clone(),
        })
    }

    /// Positive count of every label.
    pub fn label_counts(&self) -> Vec<usize> {
        self.labels
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&v| v == 1).count())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(q: usize) -> Vec<String> {
        (0..q).map(|j| format!("l{j}")).collect()
    }

    #[test]
    fn rejects_bad_shapes() {
        let x = array![[0.0], [1.0]];
        assert!(Dataset::new(x.clone(), array![[0u8, 1]], names(2)).is_err());
        assert!(Dataset::new(x.clone(), array![[0u8, 1], [1, 2]], names(2)).is_err());
        assert!(Dataset::new(x.clone(), array![[0u8, 1], [1, 0]], vec!["a".into(), "a".into()]).is_err());
        assert!(Dataset::new(x, array![[0u8, 1], [1, 0]], names(2)).is_ok());
    }

    #[test]
    fn select_duplicates_rows() {
        let d = Dataset::new(array![[0.0], [1.0]], array![[0u8, 1], [1, 0]], names(2)).unwrap();
        let s = d.select(&[1, 1, 0]).unwrap();
        assert_eq!(s.features(), array![[1.0], [1.0], [0.0]]);
        assert_eq!(s.labels(), array![[1u8, 0], [1, 0], [0, 1]]);
        assert!(d.select(&[2]).is_err());
        assert_eq!(d.label_counts(), vec![1, 1]);
    }
}
