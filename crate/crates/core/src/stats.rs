//! Nonparametric significance tests for comparing algorithms over datasets.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Above this many nonzero differences the signed-rank test switches from the
/// exact null distribution to the normal approximation.
pub const WILCOXON_EXACT_MAX: usize = 12;

pub const WILCOXON_MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `W+ - W-`: positive when `a` tends to exceed `b`.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after discarding zero differences.
    pub n_used: usize,
    pub exact: bool,
}

/// 1-based midranks of `values` (ties share the mean of their positions).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Two-tailed paired signed-rank test. Zero differences are dropped and tied
/// magnitudes get midranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    if a.len() < WILCOXON_MIN_PAIRS {
        return Err(Error::invalid(format!(
            "signed-rank test needs at least {WILCOXON_MIN_PAIRS} pairs, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("signed-rank test needs finite values"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&d| d != 0.0).collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(WilcoxonResult { statistic: 0.0, p_value: 1.0, n_used: 0, exact: true });
    }
    let ranks = midranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let statistic = 2.0 * w_plus - total;
    let (p_value, exact) = if m <= WILCOXON_EXACT_MAX {
        (exact_p(&ranks, w_plus), true)
    } else {
        (normal_p(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult { statistic, p_value, n_used: m, exact })
}

/// Null distribution of `W+` by dynamic programming over doubled midranks
/// (which are integers), then `P(|W+ - E| >= |w - E|)`.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = ((2.0 * w_plus).round() as i64 * 2 - total as i64).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as i64 * 2 - total as i64).abs() >= observed)
        .map(|(_, &c)| c)
        .sum();
    let p = extreme as f64 / 2f64.powi(ranks.len() as i32);
    p.min(1.0)
}

/// Normal approximation with continuity correction. The variance `Σr²/4`
/// over midranks already includes the tie correction.
fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let sd = (ranks.iter().map(|r| r * r).sum::<f64>() / 4.0).sqrt();
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
    (2.0 * standard_normal().sf(z)).min(1.0)
}

fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// Ranks each row (dataset) so that rank 1 is the best algorithm; ties get midranks.
pub fn rank_rows(scores: &[Vec<f64>], direction: Direction) -> Vec<Vec<f64>> {
    scores
        .iter()
        .map(|row| {
            let keyed: Vec<f64> = match direction {
                Direction::LowerIsBetter => row.clone(),
                Direction::HigherIsBetter => row.iter().map(|v| -v).collect(),
            };
            midranks(&keyed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub first: usize,
    pub second: usize,
    pub z: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub n_datasets: usize,
    pub average_ranks: Vec<f64>,
    pub chi_square: f64,
    pub p_value: f64,
    pub control: usize,
    /// One entry per non-control algorithm, in algorithm order.
    pub vs_control: Vec<PairwiseComparison>,
    /// Every unordered pair `(i, j)` with `i < j`, adjusted over all pairs.
    pub all_pairs: Vec<PairwiseComparison>,
}

impl FriedmanResult {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairwiseComparison> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.all_pairs.iter().find(|c| c.first == a && c.second == b)
    }
}

/// Finner step-down adjustment of a family of p-values, returned in input order.
pub fn finner_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len() as f64;
    let mut order: Vec<usize> = (0..p_values.len()).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; p_values.len()];
    let mut running: f64 = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let v = 1.0 - (1.0 - p_values[i]).powf(m / (pos + 1) as f64);
        running = running.max(v);
        adjusted[i] = running.clamp(0.0, 1.0);
    }
    adjusted
}

/// Friedman rank test with post-hoc z-tests on average-rank differences,
/// Finner-adjusted both against `control` and over all pairs.
///
/// `scores` is datasets x algorithms.
pub fn friedman_finner(scores: &[Vec<f64>], control: usize, direction: Direction) -> Result<FriedmanResult> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::invalid(format!("Friedman test needs at least 2 datasets, got {n}")));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::invalid(format!("Friedman test needs at least 2 algorithms, got {k}")));
    }
    if scores.iter().any(|r| r.len() != k) {
        return Err(Error::invalid("score rows have different lengths"));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Friedman test needs finite scores"));
    }
    if control >= k {
        return Err(Error::invalid(format!("control index {control} out of range for {k} algorithms")));
    }
    let ranks = rank_rows(scores, direction);
    let average_ranks: Vec<f64> = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();

    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = average_ranks.iter().map(|r| r * r).sum();
    let chi_square = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let p_value = ChiSquared::new(kf - 1.0).expect("k >= 2").sf(chi_square.max(0.0));

    let se = (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    let normal = standard_normal();
    let compare = |i: usize, j: usize| {
        let z = (average_ranks[i] - average_ranks[j]) / se;
        PairwiseComparison {
            first: i,
            second: j,
            z,
            p_value: (2.0 * normal.sf(z.abs())).min(1.0),
            adjusted_p: f64::NAN,
        }
    };
    let mut vs_control: Vec<_> = (0..k).filter(|&j| j != control).map(|j| compare(control, j)).collect();
    let adj = finner_adjust(&vs_control.iter().map(|c| c.p_value).collect::<Vec<_>>());
    vs_control.iter_mut().zip(adj).for_each(|(c, a)| c.adjusted_p = a);

    let mut all_pairs: Vec<_> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| compare(i, j)).collect();
    let adj = finner_adjust(&all_pairs.iter().map(|c| c.p_value).collect::<Vec<_>>());
    all_pairs.iter_mut().zip(adj).for_each(|(c, a)| c.adjusted_p = a);

    Ok(FriedmanResult {
        n_datasets: n,
        average_ranks,
        chi_square,
        p_value,
        control,
        vs_control,
        all_pairs,
    })
}
