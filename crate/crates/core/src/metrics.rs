//! Multi-label evaluation metrics and dataset statistics.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

fn check_shapes(truth: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<()> {
    if truth.dim() != pred.dim() {
        return Err(Error::invalid(format!(
            "truth shape {:?} differs from prediction shape {:?}",
            truth.dim(),
            pred.dim()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("empty label matrices"));
    }
    Ok(())
}

/// Fraction of mismatched label cells.
pub fn hamming_loss(truth: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<f64> {
    check_shapes(truth, pred)?;
    let wrong = truth.iter().zip(pred.iter()).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Fraction of mismatched labels for one instance.
pub fn per_instance_hamming(truth: ArrayView1<'_, u8>, pred: ArrayView1<'_, u8>) -> Result<f64> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(Error::invalid(format!(
            "label rows of length {} and {}",
            truth.len(),
            pred.len()
        )));
    }
    let wrong = truth.iter().zip(pred.iter()).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// `2TP / (2TP + FP + FN)`; a label never predicted and never present scores 1.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

pub fn label_confusions(truth: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<Vec<Confusion>> {
    check_shapes(truth, pred)?;
    Ok(truth
        .columns()
        .into_iter()
        .zip(pred.columns())
        .map(|(t, p)| {
            t.iter().zip(p.iter()).fold(Confusion::default(), |mut c, (&a, &b)| {
                match (a, b) {
                    (1, 1) => c.tp += 1,
                    (0, 1) => c.fp += 1,
                    (1, 0) => c.fn_ += 1,
                    _ => c.tn += 1,
                }
                c
            })
        })
        .collect())
}

/// Label-based macro-averaged F1 and the per-label values.
pub fn macro_f(truth: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<(f64, Vec<f64>)> {
    let per_label: Vec<f64> = label_confusions(truth, pred)?.iter().map(Confusion::f1).collect();
    let macro_f = per_label.iter().sum::<f64>() / per_label.len() as f64;
    Ok((macro_f, per_label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hamming_loss: f64,
    pub macro_f: f64,
    pub per_label_f: Vec<f64>,
    pub confusions: Vec<Confusion>,
}

impl MetricReport {
    pub fn evaluate(truth: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<Self> {
        let confusions = label_confusions(truth, pred)?;
        let per_label_f: Vec<f64> = confusions.iter().map(Confusion::f1).collect();
        Ok(Self {
            hamming_loss: hamming_loss(truth, pred)?,
            macro_f: per_label_f.iter().sum::<f64>() / per_label_f.len() as f64,
            per_label_f,
            confusions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub instances: usize,
    /// Input attributes before nominal expansion.
    pub attributes: usize,
    /// Encoded feature columns.
    pub features: usize,
    pub labels: usize,
    pub labelsets: usize,
    pub cardinality: f64,
    pub mean_ir: f64,
}

/// Cardinality and mean imbalance ratio.
///
/// `IRLbl(l) = max_l' count(l') / count(l)`, averaged over labels that occur
/// at least once; labels without positives are skipped with a warning.
pub fn dataset_stats(data: &Dataset) -> DatasetStats {
    let counts = data.label_counts();
    let n = data.n_instances();
    let cardinality = counts.iter().sum::<usize>() as f64 / n as f64;
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let present: Vec<f64> = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    for (name, _) in data.label_names().iter().zip(&counts).filter(|(_, &c)| c == 0) {
        log::warn!("label {name:?} has no positive instances; excluded from MeanIR");
    }
    let mean_ir = if present.is_empty() {
        1.0
    } else {
        present.iter().map(|&c| max / c).sum::<f64>() / present.len() as f64
    };
    let mut labelsets: Vec<Vec<u8>> = data.labels().rows().into_iter().map(|r| r.to_vec()).collect();
    labelsets.sort_unstable();
    labelsets.dedup();
    DatasetStats {
        instances: n,
        attributes: data.n_attributes(),
        features: data.n_features(),
        labels: data.n_labels(),
        labelsets: labelsets.len(),
        cardinality,
        mean_ir,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn toy() -> (Array2<u8>, Array2<u8>) {
        (array![[1u8, 0], [0, 1], [1, 1]], array![[1u8, 0], [1, 1], [1, 0]])
    }

    #[test]
    fn hamming_examples() {
        let (y, p) = toy();
        assert_eq!(hamming_loss(y.view(), y.view()).unwrap(), 0.0);
        assert_eq!(hamming_loss(y.view(), p.view()).unwrap(), 2.0 / 6.0);
        let c = y.mapv(|v| 1 - v);
        assert_eq!(hamming_loss(y.view(), c.view()).unwrap(), 1.0);
        assert!(hamming_loss(y.view(), array![[1u8, 0]].view()).is_err());
    }

    #[test]
    fn per_instance_examples() {
        let a = array![1u8, 0, 1];
        assert_eq!(per_instance_hamming(a.view(), a.view()).unwrap(), 0.0);
        assert_eq!(per_instance_hamming(a.view(), array![0u8, 0, 1].view()).unwrap(), 1.0 / 3.0);
        assert_eq!(per_instance_hamming(a.view(), array![0u8, 1, 0].view()).unwrap(), 1.0);
        assert!(per_instance_hamming(a.view(), array![0u8].view()).is_err());
    }

    #[test]
    fn macro_f_examples() {
        let (y, p) = toy();
        // Label 0: TP=2 FP=1 FN=0 -> 4/5. Label 1: TP=1 FP=0 FN=1 -> 2/3.
        let (m, per) = macro_f(y.view(), p.view()).unwrap();
        assert_eq!(per, vec![0.8, 2.0 / 3.0]);
        assert_eq!(m, (0.8 + 2.0 / 3.0) / 2.0);
        assert!((m - 0.7333).abs() < 1e-4);
        assert_eq!(macro_f(y.view(), y.view()).unwrap().0, 1.0);
        let z = Array2::<u8>::zeros((3, 2));
        assert_eq!(macro_f(z.view(), z.view()).unwrap().0, 1.0);
        // Missed every positive.
        assert_eq!(macro_f(y.view(), z.view()).unwrap().0, 0.0);
    }

    #[test]
    fn report_is_consistent() {
        let (y, p) = toy();
        let r = MetricReport::evaluate(y.view(), p.view()).unwrap();
        let wrong: usize = r.confusions.iter().map(|c| c.fp + c.fn_).sum();
        assert_eq!(r.hamming_loss, wrong as f64 / 6.0);
        assert_eq!(r.confusions[0], Confusion { tp: 2, fp: 1, fn_: 0, tn: 0 });
    }

    fn names(q: usize) -> Vec<String> {
        (0..q).map(|j| format!("l{j}")).collect()
    }

    #[test]
    fn stats_examples() {
        let single = Dataset::new(Array2::zeros((3, 1)), array![[1u8, 0], [0, 1], [1, 0]], names(2)).unwrap();
        let s = dataset_stats(&single);
        assert_eq!(s.cardinality, 1.0);
        // counts 2 and 1: IR = (2/2 + 2/1) / 2.
        assert_eq!(s.mean_ir, 1.5);
        assert_eq!(s.labelsets, 2);
        let balanced = Dataset::new(Array2::zeros((2, 1)), array![[1u8, 0], [0, 1]], names(2)).unwrap();
        assert_eq!(dataset_stats(&balanced).mean_ir, 1.0);
        let missing = Dataset::new(Array2::zeros((2, 1)), array![[1u8, 0, 0], [1, 1, 0]], names(3)).unwrap();
        assert_eq!(dataset_stats(&missing).mean_ir, 1.5);
    }

    proptest! {
        #[test]
        fn hamming_is_mean_of_rows(seed in any::<u64>(), n in 1usize..20, q in 1usize..8) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y = Array2::from_shape_fn((n, q), |_| u8::from(rng.random_bool(0.4)));
            let p = Array2::from_shape_fn((n, q), |_| u8::from(rng.random_bool(0.4)));
            let rows: f64 = (0..n).map(|i| per_instance_hamming(y.row(i), p.row(i)).unwrap()).sum::<f64>() / n as f64;
            prop_assert!((rows - hamming_loss(y.view(), p.view()).unwrap()).abs() < 1e-12);
            let (m, _) = macro_f(y.view(), p.view()).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
            let mut perm: Vec<usize> = (0..q).collect();
            perm.reverse();
            let ys = y.select(ndarray::Axis(1), &perm);
            let ps = p.select(ndarray::Axis(1), &perm);
            prop_assert!((macro_f(ys.view(), ps.view()).unwrap().0 - m).abs() < 1e-12);
        }
    }
}
