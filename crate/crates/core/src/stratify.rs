//! Fold assignment for multi-label cross-validation.
//!
//! Iterative stratification walks the labels from rarest to most common
//! (counting only instances not yet placed). Each instance carrying the
//! current label goes to the fold that still wants the most of that label;
//! ties go to the fold with the most free capacity, then to a seeded random
//! choice. Instances without any label are placed last, by capacity.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fold index per instance for one repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub folds: Vec<usize>,
    pub n_folds: usize,
    pub repetition: usize,
    pub seed: u64,
}

impl FoldAssignment {
    /// Training and test instance indices for fold `f`, each ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        fold_sizes(&self.folds, self.n_folds)
    }
}

fn fold_sizes(assignment: &[usize], n_folds: usize) -> Vec<usize> {
    let mut sizes = vec![0; n_folds];
    for &f in assignment {
        sizes[f] += 1;
    }
    sizes
}

/// One placement decision: `label` is the label being processed, `None` in
/// the leftover phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub instance: usize,
    pub label: Option<usize>,
    pub fold: usize,
}

fn check(n: usize, n_folds: usize) -> Result<()> {
    if n_folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {n_folds}")));
    }
    if n_folds > n {
        return Err(Error::invalid(format!("{n_folds} folds for only {n} instances")));
    }
    Ok(())
}

pub fn iterative_stratification(labels: ArrayView2<'_, u8>, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    let placements = stratify_with_trace(labels, n_folds, seed)?;
    let mut folds = vec![0; labels.nrows()];
    for p in &placements {
        folds[p.instance] = p.fold;
    }
    // Demand can starve a fold on tiny inputs; move the latest placement from
    // the largest fold into each empty one.
    loop {
        let sizes = fold_sizes(&folds, n_folds);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { break };
        let largest = (0..n_folds).max_by_key(|&f| (sizes[f], std::cmp::Reverse(f))).expect("folds");
        let donor = placements.iter().rev().find(|p| folds[p.instance] == largest).expect("nonempty fold");
        folds[donor.instance] = empty;
    }
    Ok(folds)
}

/// Iterative stratification returning every placement in decision order.
pub fn stratify_with_trace(labels: ArrayView2<'_, u8>, n_folds: usize, seed: u64) -> Result<Vec<Placement>> {
    let (n, q) = labels.dim();
    check(n, n_folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let share = 1.0 / n_folds as f64;
    let positives: Vec<usize> = (0..q).map(|l| labels.column(l).iter().filter(|&&v| v == 1).count()).collect();
    let mut state = Bookkeeping {
        labels,
        capacity: vec![n as f64 * share; n_folds],
        demand: positives.iter().map(|&c| vec![c as f64 * share; n_folds]).collect(),
        remaining: positives,
        placed: vec![false; n],
        trace: Vec::with_capacity(n),
    };
    while let Some(label) = (0..q).filter(|&l| state.remaining[l] > 0).min_by_key(|&l| (state.remaining[l], l)) {
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| !state.placed[i] && labels[[i, label]] == 1)
            .collect();
        for i in members {
            let fold = choose(&state.demand[label], &state.capacity, &mut rng);
            state.place(i, Some(label), fold);
        }
    }
    let leftovers: Vec<usize> = order.iter().copied().filter(|&i| !state.placed[i]).collect();
    for i in leftovers {
        let fold = choose(&state.capacity, &state.capacity, &mut rng);
        state.place(i, None, fold);
    }
    Ok(state.trace)
}

struct Bookkeeping<'a> {
    labels: ArrayView2<'a, u8>,
    capacity: Vec<f64>,
    /// `demand[l][f]`: positives of label `l` fold `f` still wants.
    demand: Vec<Vec<f64>>,
    /// Unplaced positives per label.
    remaining: Vec<usize>,
    placed: Vec<bool>,
    trace: Vec<Placement>,
}

impl Bookkeeping<'_> {
    fn place(&mut self, i: usize, label: Option<usize>, fold: usize) {
        self.placed[i] = true;
        self.capacity[fold] -= 1.0;
        for (l, &v) in self.labels.row(i).iter().enumerate() {
            if v == 1 {
                self.demand[l][fold] -= 1.0;
                self.remaining[l] -= 1;
            }
        }
        self.trace.push(Placement { instance: i, label, fold });
    }
}

/// Folds maximising `primary`, then `secondary`; a uniform pick among the rest.
fn choose(primary: &[f64], secondary: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let best = primary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..primary.len()).filter(|&f| primary[f] == best).collect();
    let best2 = tied.iter().map(|&f| secondary[f]).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = tied.into_iter().filter(|&f| secondary[f] == best2).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// Shuffled round-robin assignment: fold sizes differ by at most one.
pub fn random_split(n: usize, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    check(n, n_folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % n_folds;
    }
    Ok(folds)
}

/// Mean over labels and folds of `|fold proportion - overall proportion|`.
pub fn label_distribution_deviation(labels: ArrayView2<'_, u8>, folds: &[usize], n_folds: usize) -> f64 {
    let (n, q) = labels.dim();
    let sizes = fold_sizes(folds, n_folds);
    let mut total = 0.0;
    for l in 0..q {
        let col = labels.column(l);
        let overall = col.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
        let mut per_fold = vec![0usize; n_folds];
        for (i, &f) in folds.iter().enumerate() {
            per_fold[f] += usize::from(col[i]);
        }
        for f in 0..n_folds {
            let prop = if sizes[f] == 0 { 0.0 } else { per_fold[f] as f64 / sizes[f] as f64 };
            total += (prop - overall).abs();
        }
    }
    total / (q * n_folds) as f64
}
