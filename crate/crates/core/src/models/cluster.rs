//! Partitioning a label subset into groups for a HOMER node.
//!
//! Labels are represented by their indicator columns over the node's
//! instances and compared with Euclidean distance.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Random,
    KMeans,
    BalancedKMeans,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 3] = [
        ClusterMethod::Random,
        ClusterMethod::KMeans,
        ClusterMethod::BalancedKMeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::Random => "random",
            ClusterMethod::KMeans => "k-means",
            ClusterMethod::BalancedKMeans => "balanced-k-means",
        }
    }
}

/// Splits `labels` (column indices into `label_matrix`) into
/// `min(k, labels.len())` disjoint nonempty groups.
///
/// Groups come back sorted internally and ordered by their smallest label.
pub fn cluster_labels(
    label_matrix: ArrayView2<'_, u8>,
    labels: &[usize],
    method: ClusterMethod,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if labels.is_empty() {
        return Err(Error::invalid("cannot cluster an empty label set"));
    }
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 clusters, got {k}")));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= label_matrix.ncols()) {
        return Err(Error::invalid(format!("label index {bad} out of range")));
    }
    let k = k.min(labels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = if k == labels.len() {
        (0..k).collect()
    } else {
        let points = label_matrix.select(Axis(1), labels).reversed_axes().mapv(f64::from);
        match method {
            ClusterMethod::Random => random_partition(labels.len(), k, &mut rng),
            ClusterMethod::KMeans => kmeans(points.view(), k, &mut rng),
            ClusterMethod::BalancedKMeans => balanced_kmeans(points.view(), k, &mut rng),
        }
    };
    let mut groups = vec![Vec::new(); k];
    for (&label, &g) in labels.iter().zip(&assignment) {
        groups[g].push(label);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    debug_assert!(groups.iter().all(|g| !g.is_empty()));
    Ok(groups)
}

fn random_partition(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(rng);
    let mut assignment = vec![0; m];
    for (pos, &item) in items.iter().enumerate() {
        // The first k shuffled items seed one group each.
        assignment[item] = if pos < k { pos } else { rng.random_range(0..k) };
    }
    assignment
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding; falls back to an unused point when every remaining
/// point coincides with a chosen centre.
fn seed_centroids(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let m = points.nrows();
    let mut chosen = vec![rng.random_range(0..m)];
    while chosen.len() < k {
        let d2: Vec<f64> = (0..m)
            .map(|i| {
                chosen
                    .iter()
                    .map(|&c| sq_dist(points.row(i), points.row(c)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            let unused: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen.push(next);
    }
    points.select(Axis(0), &chosen)
}

fn distances(points: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((points.nrows(), centroids.nrows()), |(i, c)| {
        sq_dist(points.row(i), centroids.row(c))
    })
}

fn nearest(row: ndarray::ArrayView1<'_, f64>) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (c, &d)| if d < best.1 { (c, d) } else { best })
        .0
}

fn recompute(points: ArrayView2<'_, f64>, assignment: &[usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        let mut row = sums.row_mut(c);
        row += &points.row(i);
        counts[c] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            let mean: Array1<f64> = sums.row(c).mapv(|v| v / counts[c] as f64);
            centroids.row_mut(c).assign(&mean);
        }
    }
}

/// Moves the point farthest from its centre into each empty cluster.
fn repair_empty(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, assignment: &mut [usize]) {
    let k = centroids.nrows();
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..assignment.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .map(|i| (i, sq_dist(points.row(i), centroids.row(assignment[i]))))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best })
            .0;
        assignment[donor] = empty;
    }
}

fn kmeans(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let dist = distances(points, &centroids);
        let mut next: Vec<usize> = dist.rows().into_iter().map(nearest).collect();
        repair_empty(points, &centroids, &mut next);
        if next == assignment {
            break;
        }
        assignment = next;
        recompute(points, &assignment, &mut centroids);
    }
    assignment
}

/// k-means whose groups differ in size by at most one.
///
/// Items are placed greedily, most decisive first (largest gap between the
/// nearest and second-nearest centre), into the nearest group with room. Only
/// `m mod k` groups may grow to `ceil(m/k)`; the rest stop at `floor(m/k)`.
fn balanced_kmeans(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = points.nrows();
    let floor = m / k;
    let large_slots = m % k;
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let dist = distances(points, &centroids);
        let mut order: Vec<(usize, f64)> = dist
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let mut sorted: Vec<f64> = row.to_vec();
                sorted.sort_by(f64::total_cmp);
                (i, sorted.get(1).copied().unwrap_or(sorted[0]) - sorted[0])
            })
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut sizes = vec![0usize; k];
        let mut large_used = 0;
        let mut next = vec![0usize; m];
        for (i, _) in order {
            let mut prefs: Vec<usize> = (0..k).collect();
            prefs.sort_by(|&a, &b| dist[[i, a]].total_cmp(&dist[[i, b]]).then(a.cmp(&b)));
            let target = prefs
                .into_iter()
                .find(|&c| sizes[c] < floor || (sizes[c] == floor && large_used < large_slots))
                .expect("capacity covers every item");
            if sizes[target] == floor {
                large_used += 1;
            }
            sizes[target] += 1;
            next[i] = target;
        }
        if next == assignment {
            break;
        }
        assignment = next;
        recompute(points, &assignment, &mut centroids);
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn sizes(groups: &[Vec<usize>]) -> Vec<usize> {
        groups.iter().map(Vec::len).collect()
    }

    #[test]
    fn balanced_four_into_two() {
        let y = array![[1u8, 1, 1, 0], [1, 1, 1, 0], [0, 0, 0, 1]];
        let g = cluster_labels(y.view(), &[0, 1, 2, 3], ClusterMethod::BalancedKMeans, 2, 1).unwrap();
        assert_eq!(sizes(&g), vec![2, 2]);
    }

    #[test]
    fn kmeans_groups_identical_columns() {
        // Columns 0 and 1 are identical, as are 2 and 3, and the pairs are orthogonal.
        let y = array![[1u8, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]];
        for seed in 0..20 {
            let g = cluster_labels(y.view(), &[0, 1, 2, 3], ClusterMethod::KMeans, 2, seed).unwrap();
            assert_eq!(g, vec![vec![0, 1], vec![2, 3]]);
        }
    }

    #[test]
    fn kmeans_toy_matches_brute_force() {
        // Exhaustive oracle: the optimal 2-partition by within-group squared error.
        let y = array![[1u8, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]];
        let cols: Vec<Vec<f64>> = (0..4).map(|j| y.column(j).mapv(f64::from).to_vec()).collect();
        let sse = |group: &[usize]| -> f64 {
            let dim = cols[0].len();
            let mean: Vec<f64> = (0..dim)
                .map(|r| group.iter().map(|&j| cols[j][r]).sum::<f64>() / group.len() as f64)
                .collect();
            group
                .iter()
                .map(|&j| cols[j].iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .sum()
        };
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..15 {
            let a: Vec<usize> = (0..4).filter(|j| mask >> j & 1 == 1).collect();
            let b: Vec<usize> = (0..4).filter(|j| mask >> j & 1 == 0).collect();
            let cost = sse(&a) + sse(&b);
            if cost < best.0 {
                best = (cost, mask);
            }
        }
        let mut oracle: Vec<Vec<usize>> = vec![
            (0..4).filter(|j| best.1 >> j & 1 == 1).collect(),
            (0..4).filter(|j| best.1 >> j & 1 == 0).collect(),
        ];
        oracle.sort();
        let g = cluster_labels(y.view(), &[0, 1, 2, 3], ClusterMethod::KMeans, 2, 3).unwrap();
        assert_eq!(g, oracle);
    }

    #[test]
    fn random_is_deterministic() {
        let y = Array2::<u8>::zeros((3, 9));
        let labels: Vec<usize> = (0..9).collect();
        let a = cluster_labels(y.view(), &labels, ClusterMethod::Random, 3, 42).unwrap();
        let b = cluster_labels(y.view(), &labels, ClusterMethod::Random, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn small_sets_become_singletons() {
        let y = array![[1u8, 0, 1]];
        let g = cluster_labels(y.view(), &[2, 0], ClusterMethod::KMeans, 3, 0).unwrap();
        assert_eq!(g, vec![vec![0], vec![2]]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let y = array![[1u8, 0, 1]];
        assert!(cluster_labels(y.view(), &[], ClusterMethod::KMeans, 2, 0).is_err());
        assert!(cluster_labels(y.view(), &[0, 1], ClusterMethod::KMeans, 1, 0).is_err());
        assert!(cluster_labels(y.view(), &[0, 5], ClusterMethod::KMeans, 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_are_valid(
            seed in any::<u64>(),
            n in 0usize..12,
            m in 1usize..14,
            k in 2usize..6,
            method in prop::sample::select(ClusterMethod::ALL.to_vec()),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = Array2::from_shape_fn((n, m), |_| u8::from(rng.random_bool(0.3)));
            let labels: Vec<usize> = (0..m).collect();
            let groups = cluster_labels(y.view(), &labels, method, k, seed).unwrap();
            prop_assert_eq!(groups.len(), k.min(m));
            let mut all: Vec<usize> = groups.concat();
            all.sort_unstable();
            prop_assert_eq!(all, labels);
            prop_assert!(groups.iter().all(|g| !g.is_empty()));
            if method == ClusterMethod::BalancedKMeans {
                let s = sizes(&groups);
                prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
            }
        }
    }
}
