use mlkfhe_core::stratify::{
    iterative_stratification, label_distribution_deviation, random_split, stratify_with_trace, FoldAssignment,
};
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_labels(n: usize, q: usize, seed: u64) -> Array2<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = (0..q).map(|_| rng.random_range(0.05..0.6)).collect();
    Array2::from_shape_fn((n, q), |(_, j)| u8::from(rng.random_bool(rates[j])))
}

fn sizes(folds: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    folds.iter().for_each(|&f| s[f] += 1);
    s
}

#[test]
fn exact_split_of_positives() {
    let mut y = Array2::<u8>::zeros((10, 1));
    for i in [1, 4, 6, 9] {
        y[[i, 0]] = 1;
    }
    for seed in 0..10 {
        let folds = iterative_stratification(y.view(), 2, seed).unwrap();
        for f in 0..2 {
            let pos = (0..10).filter(|&i| folds[i] == f && y[[i, 0]] == 1).count();
            assert_eq!(pos, 2);
        }
        assert_eq!(sizes(&folds, 2), vec![5, 5]);
    }
}

#[test]
fn identical_rows_balance_by_capacity() {
    for n in [7, 10, 13] {
        let y = Array2::<u8>::from_elem((n, 3), 1);
        let folds = iterative_stratification(y.view(), 4, 1).unwrap();
        let s = sizes(&folds, 4);
        assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1, "{s:?}");
        let none = Array2::<u8>::zeros((n, 2));
        let s = sizes(&iterative_stratification(none.view(), 4, 1).unwrap(), 4);
        assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1, "{s:?}");
    }
}

#[test]
fn rejects_bad_fold_counts() {
    let y = Array2::<u8>::zeros((3, 1));
    assert!(iterative_stratification(y.view(), 4, 0).is_err());
    assert!(iterative_stratification(y.view(), 1, 0).is_err());
    assert!(random_split(3, 4, 0).is_err());
}

/// Replays the demand bookkeeping independently and checks every decision
/// was one the procedure may make.
fn replay(labels: ArrayView2<'_, u8>, k: usize, trace: &[mlkfhe_core::stratify::Placement]) {
    let (n, q) = labels.dim();
    let pos: Vec<f64> = (0..q).map(|l| labels.column(l).sum() as f64).collect();
    let mut cap = vec![n as f64 / k as f64; k];
    let mut want: Vec<Vec<f64>> = pos.iter().map(|&p| vec![p / k as f64; k]).collect();
    let mut left: Vec<usize> = pos.iter().map(|&p| p as usize).collect();
    let mut done = vec![false; n];
    assert_eq!(trace.len(), n);
    for step in trace {
        assert!(!done[step.instance]);
        match step.label {
            Some(l) => {
                assert_eq!(labels[[step.instance, l]], 1);
                let rarest = (0..q).filter(|&m| left[m] > 0).map(|m| left[m]).min().unwrap();
                assert_eq!(left[l], rarest, "label {l} is not the scarcest");
                let top = want[l].iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(want[l][step.fold], top);
                let top_cap = (0..k).filter(|&f| want[l][f] == top).map(|f| cap[f]).fold(f64::MIN, f64::max);
                assert_eq!(cap[step.fold], top_cap);
            }
            None => {
                assert!(left.iter().all(|&c| c == 0));
                let top = cap.iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(cap[step.fold], top);
            }
        }
        done[step.instance] = true;
        cap[step.fold] -= 1.0;
        for l in 0..q {
            if labels[[step.instance, l]] == 1 {
                want[l][step.fold] -= 1.0;
                left[l] -= 1;
            }
        }
    }
}

#[test]
fn decisions_follow_the_procedure_and_stay_close() {
    for seed in 0..10 {
        let y = random_labels(50, 4, seed);
        let trace = stratify_with_trace(y.view(), 5, seed).unwrap();
        replay(y.view(), 5, &trace);
        let folds = iterative_stratification(y.view(), 5, seed).unwrap();
        for l in 0..4 {
            let expected = y.column(l).sum() as f64 / 5.0;
            for f in 0..5 {
                let got = (0..50).filter(|&i| folds[i] == f && y[[i, l]] == 1).count() as f64;
                assert!((got - expected).abs() <= f64::max(1.0, 0.1 * expected), "label {l} fold {f}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn beats_random_splits() {
    let mut wins = 0;
    for trial in 0..20 {
        let y = random_labels(120, 6, 1000 + trial);
        let strat = iterative_stratification(y.view(), 5, trial).unwrap();
        let rand = random_split(120, 5, trial).unwrap();
        if label_distribution_deviation(y.view(), &strat, 5) < label_distribution_deviation(y.view(), &rand, 5) {
            wins += 1;
        }
    }
    assert!(wins >= 19, "won {wins} of 20");
}

#[test]
fn split_is_disjoint_and_complete() {
    let y = random_labels(23, 3, 4);
    let a = FoldAssignment { folds: iterative_stratification(y.view(), 5, 2).unwrap(), n_folds: 5, repetition: 0, seed: 2 };
    let mut seen = vec![0; 23];
    for f in 0..5 {
        let (train, test) = a.split(f);
        assert!(!test.is_empty());
        assert_eq!(train.len() + test.len(), 23);
        assert!(train.iter().all(|i| !test.contains(i)));
        test.iter().for_each(|&i| seen[i] += 1);
    }
    assert!(seen.iter().all(|&c| c == 1));
}

proptest! {
    #[test]
    fn folds_are_nonempty_and_deterministic(n in 2usize..40, q in 1usize..5, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let y = random_labels(n, q, seed);
        let folds = iterative_stratification(y.view(), k, seed).unwrap();
        prop_assert!(sizes(&folds, k).iter().all(|&s| s > 0));
        prop_assert_eq!(&folds, &iterative_stratification(y.view(), k, seed).unwrap());
        let r = random_split(n, k, seed).unwrap();
        let s = sizes(&r, k);
        prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
    }
}
