//! Hierarchy of multi-label classifiers.
//!
//! The root owns every label and every instance. Each internal node splits
//! its labels into groups, one child per group, and keeps only the instances
//! carrying at least one of its labels. For every child the node fits a
//! binary meta-label model answering "does this instance have any label in
//! the child's group". Leaves own exactly one label.
//!
//! Prediction walks from the root and follows a child whenever its
//! meta-score reaches 0.5. A label's score is the product of meta-scores on
//! its root-to-leaf path, truncated at the first branch that was not followed.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_input_dim, check_weights, cluster_labels, is_relevant, ClusterMethod, ScoreModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{fit_binary, BinaryLearnerSpec, FittedBinaryModel};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomerParams {
    pub clustering: ClusterMethod,
    pub k: usize,
    pub learner: BinaryLearnerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomerNode {
    pub labels: Vec<usize>,
    /// Node indices of the children, aligned with `meta`.
    pub children: Vec<usize>,
    pub meta: Vec<FittedBinaryModel>,
    /// Training rows that reached this node. Not persisted.
    #[serde(skip)]
    pub rows: Vec<usize>,
}

impl HomerNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Nodes in depth-first preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomerTree {
    n_features: usize,
    n_labels: usize,
    nodes: Vec<HomerNode>,
}

impl HomerTree {
    pub fn nodes(&self) -> &[HomerNode] {
        &self.nodes
    }

    pub fn root(&self) -> &HomerNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(tree: &HomerTree, v: usize) -> usize {
            tree.nodes[v]
                .children
                .iter()
                .map(|&c| 1 + walk(tree, c))
                .max()
                .unwrap_or(0)
        }
        walk(self, 0)
    }

    /// Assembles a tree from explicit nodes, checking the hierarchy invariants.
    pub fn from_nodes(n_features: usize, n_labels: usize, nodes: Vec<HomerNode>) -> Result<Self> {
        let tree = Self {
            n_features,
            n_labels,
            nodes,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Root holds every label, leaves hold one, children partition their parent.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let mut root = self.nodes[0].labels.clone();
        root.sort_unstable();
        if root != (0..self.n_labels).collect::<Vec<_>>() {
            return bad("root does not hold every label".into());
        }
        let mut leaf_of = vec![None; self.n_labels];
        for (v, node) in self.nodes.iter().enumerate() {
            if node.children.len() != node.meta.len() {
                return bad(format!("node {v} has {} children but {} meta models", node.children.len(), node.meta.len()));
            }
            if node.is_leaf() {
                if node.labels.len() != 1 {
                    return bad(format!("leaf {v} holds {} labels", node.labels.len()));
                }
                let l = node.labels[0];
                if leaf_of[l].replace(v).is_some() {
                    return bad(format!("label {l} appears in two leaves"));
                }
                continue;
            }
            let mut union: Vec<usize> = Vec::new();
            for &c in &node.children {
                if c <= v || c >= self.nodes.len() {
                    return bad(format!("node {v} has invalid child {c}"));
                }
                union.extend(&self.nodes[c].labels);
            }
            let total = union.len();
            union.sort_unstable();
            union.dedup();
            if union.len() != total {
                return bad(format!("children of node {v} overlap"));
            }
            let mut own = node.labels.clone();
            own.sort_unstable();
            if own != union {
                return bad(format!("children of node {v} do not cover its labels"));
            }
        }
        if leaf_of.iter().any(Option::is_none) {
            return bad("some label has no leaf".into());
        }
        Ok(())
    }
}

pub fn train_homer(data: &Dataset, weights: &[f64], params: &HomerParams, seed: u64) -> Result<HomerTree> {
    check_weights(data.n_instances(), weights)?;
    if data.n_labels() < 2 {
        return Err(Error::invalid("HOMER needs at least two labels"));
    }
    if params.k < 2 {
        return Err(Error::invalid(format!("HOMER needs k >= 2, got {}", params.k)));
    }
    let mut builder = Builder {
        data,
        weights,
        params,
        seed,
        fits: 0,
        nodes: Vec::new(),
    };
    builder.grow((0..data.n_labels()).collect(), (0..data.n_instances()).collect())?;
    Ok(HomerTree {
        n_features: data.n_features(),
        n_labels: data.n_labels(),
        nodes: builder.nodes,
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    weights: &'a [f64],
    params: &'a HomerParams,
    seed: u64,
    fits: u64,
    nodes: Vec<HomerNode>,
}

impl Builder<'_> {
    fn grow(&mut self, labels: Vec<usize>, rows: Vec<usize>) -> Result<usize> {
        let v = self.nodes.len();
        self.nodes.push(HomerNode {
            labels: labels.clone(),
            children: Vec::new(),
            meta: Vec::new(),
            rows: rows.clone(),
        });
        if labels.len() == 1 {
            return Ok(v);
        }
        let node_labels = self.data.labels().select(Axis(0), &rows);
        let groups = cluster_labels(
            node_labels.view(),
            &labels,
            self.params.clustering,
            self.params.k,
            derive_seed(self.seed, 2 * v as u64 + 1),
        )?;
        let node_features = self.data.features().select(Axis(0), &rows);
        let node_weights: Vec<f64> = rows.iter().map(|&i| self.weights[i]).collect();
        for group in groups {
            let member: Vec<u8> = node_labels
                .rows()
                .into_iter()
                .map(|y| u8::from(group.iter().any(|&l| y[l] == 1)))
                .collect();
            let meta = self.fit_meta(node_features.view(), &member, &node_weights)?;
            let child_rows: Vec<usize> = rows
                .iter()
                .zip(&member)
                .filter(|(_, &m)| m == 1)
                .map(|(&i, _)| i)
                .collect();
            let c = self.grow(group, child_rows)?;
            self.nodes[v].children.push(c);
            self.nodes[v].meta.push(meta);
        }
        Ok(v)
    }

    fn fit_meta(&mut self, x: ArrayView2<'_, f64>, targets: &[u8], weights: &[f64]) -> Result<FittedBinaryModel> {
        let stream = self.fits;
        self.fits += 1;
        if weights.iter().sum::<f64>() <= 0.0 {
            // No (weighted) instances reached this node.
            return Ok(FittedBinaryModel::constant(x.ncols(), 0.0));
        }
        let spec = self
            .params
            .learner
            .clone()
            .with_seed(derive_seed(self.seed, 2 * stream));
        fit_binary(x, targets, weights, &spec)
    }
}

impl ScoreModel for HomerTree {
    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input_dim(self.n_features, x)?;
        let mut out = Array2::zeros((x.nrows(), self.n_labels));
        let rows: Vec<usize> = (0..x.nrows()).collect();
        let products = vec![1.0; rows.len()];
        self.descend(0, x, &rows, &products, &mut out)?;
        Ok(out)
    }
}

impl HomerTree {
    /// `rows` reached node `v` with accumulated path products `products`.
    fn descend(
        &self,
        v: usize,
        x: ArrayView2<'_, f64>,
        rows: &[usize],
        products: &[f64],
        out: &mut Array2<f64>,
    ) -> Result<()> {
        let node = &self.nodes[v];
        if rows.is_empty() {
            return Ok(());
        }
        if node.is_leaf() {
            for (&r, &p) in rows.iter().zip(products) {
                out[[r, node.labels[0]]] = p;
            }
            return Ok(());
        }
        let sub = x.select(Axis(0), rows);
        for (&c, meta) in node.children.iter().zip(&node.meta) {
            let scores = meta.predict_scores(sub.view())?;
            let mut follow_rows = Vec::new();
            let mut follow_products = Vec::new();
            for ((&r, &p), &s) in rows.iter().zip(products).zip(&scores) {
                let reached = p * s;
                if is_relevant(s) {
                    follow_rows.push(r);
                    follow_products.push(reached);
                } else {
                    for &l in &self.nodes[c].labels {
                        out[[r, l]] = reached;
                    }
                }
            }
            self.descend(c, x, &follow_rows, &follow_products, out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(q: usize) -> Vec<String> {
        (0..q).map(|j| format!("l{j}")).collect()
    }

    fn params(method: ClusterMethod, k: usize) -> HomerParams {
        HomerParams {
            clustering: method,
            k,
            learner: BinaryLearnerSpec::default(),
        }
    }

    fn leaf(label: usize) -> HomerNode {
        HomerNode {
            labels: vec![label],
            children: vec![],
            meta: vec![],
            rows: vec![],
        }
    }

    #[test]
    fn two_labels_give_depth_one() {
        let d = Dataset::new(
            array![[0.0], [1.0], [2.0], [3.0]],
            array![[1u8, 0], [1, 1], [0, 1], [0, 1]],
            names(2),
        )
        .unwrap();
        let t = train_homer(&d, &[1.0; 4], &params(ClusterMethod::KMeans, 2), 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.root().meta.len(), 2);
        assert!(t.validate().is_ok());
        // Depth-one scores are exactly the root meta-scores.
        let x = array![[0.5], [2.5]];
        let s = t.predict_matrix(x.view()).unwrap();
        for (j, &c) in t.root().children.iter().enumerate() {
            let label = t.nodes()[c].labels[0];
            let meta = t.root().meta[j].predict_scores(x.view()).unwrap();
            assert_eq!(s.column(label), meta);
        }
    }

    #[test]
    fn seven_labels_k3_structure() {
        let y = array![
            [1u8, 0, 1, 1, 0, 0, 1],
            [0, 1, 1, 0, 1, 0, 0],
            [1, 1, 0, 0, 0, 1, 1],
            [0, 0, 1, 1, 1, 1, 0],
            [1, 0, 0, 1, 0, 1, 0],
            [0, 1, 0, 0, 1, 0, 1]
        ];
        let x = Array2::from_shape_fn((6, 3), |(i, j)| (i * 3 + j) as f64 / 10.0);
        let d = Dataset::new(x, y, names(7)).unwrap();
        for method in ClusterMethod::ALL {
            let t = train_homer(&d, &[1.0; 6], &params(method, 3), 9).unwrap();
            t.validate().unwrap();
            assert!(t.root().children.len() <= 3);
        }
    }

    #[test]
    fn node_rows_follow_membership_rule() {
        // Labels {0,1} co-occur and {2,3} co-occur: k-means splits them into those blocks.
        let y = array![
            [1u8, 1, 0, 0],
            [1, 0, 0, 0],
            [0, 0, 1, 1],
            [0, 0, 0, 1],
            [0, 0, 0, 0],
            [1, 1, 1, 1]
        ];
        let x = Array2::from_shape_fn((6, 2), |(i, j)| (i + j) as f64);
        let d = Dataset::new(x, y, names(4)).unwrap();
        let t = train_homer(&d, &[1.0; 6], &params(ClusterMethod::KMeans, 2), 1).unwrap();
        // Hand filtered: block {0,1} -> rows 0,1,5; block {2,3} -> rows 2,3,5;
        // leaves 0: 0,1,5; 1: 0,5; 2: 2,5; 3: 2,3,5.
        let expect = |labels: &[usize]| -> Vec<usize> {
            match labels {
                [0, 1] => vec![0, 1, 5],
                [2, 3] => vec![2, 3, 5],
                [0] => vec![0, 1, 5],
                [1] => vec![0, 5],
                [2] => vec![2, 5],
                [3] => vec![2, 3, 5],
                [0, 1, 2, 3] => vec![0, 1, 2, 3, 4, 5],
                other => panic!("unexpected node {other:?}"),
            }
        };
        assert_eq!(t.nodes().len(), 7);
        for node in t.nodes() {
            assert_eq!(node.rows, expect(&node.labels));
        }
    }

    #[test]
    fn hand_built_path_products() {
        let c = |s: f64| FittedBinaryModel::constant(1, s);
        let nodes = vec![
            HomerNode { labels: vec![0, 1, 2], children: vec![1, 4], meta: vec![c(0.9), c(0.2)], rows: vec![] },
            HomerNode { labels: vec![0, 1], children: vec![2, 3], meta: vec![c(0.6), c(0.4)], rows: vec![] },
            leaf(0),
            leaf(1),
            leaf(2),
        ];
        let t = HomerTree::from_nodes(1, 3, nodes).unwrap();
        let s = t.predict(array![0.0].view()).unwrap();
        assert!((s[0] - 0.54).abs() < 1e-12);
        assert!((s[1] - 0.36).abs() < 1e-12);
        assert!((s[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_ones_path_scores_one() {
        let c = |s: f64| FittedBinaryModel::constant(2, s);
        let nodes = vec![
            HomerNode { labels: vec![0, 1, 2], children: vec![1, 4], meta: vec![c(1.0), c(1.0)], rows: vec![] },
            HomerNode { labels: vec![0, 1], children: vec![2, 3], meta: vec![c(1.0), c(1.0)], rows: vec![] },
            leaf(0),
            leaf(1),
            leaf(2),
        ];
        let t = HomerTree::from_nodes(2, 3, nodes).unwrap();
        assert_eq!(t.predict(array![3.0, 4.0].view()).unwrap(), array![1.0, 1.0, 1.0]);
        assert!(t.predict(array![3.0].view()).is_err());
    }

    #[test]
    fn invalid_trees_rejected() {
        let c = |s: f64| FittedBinaryModel::constant(1, s);
        let overlapping = vec![
            HomerNode { labels: vec![0, 1], children: vec![1, 2], meta: vec![c(1.0), c(1.0)], rows: vec![] },
            leaf(0),
            leaf(0),
        ];
        assert!(HomerTree::from_nodes(1, 2, overlapping).is_err());
    }

    #[test]
    fn unreached_node_gets_negative_meta() {
        // Label 2 never occurs, so its leaf sees no rows; siblings still train.
        let d = Dataset::new(
            array![[0.0], [1.0], [2.0]],
            array![[1u8, 0, 0], [0, 1, 0], [1, 1, 0]],
            names(3),
        )
        .unwrap();
        let t = train_homer(&d, &[1.0; 3], &params(ClusterMethod::Random, 3), 0).unwrap();
        t.validate().unwrap();
        let s = t.predict_matrix(d.features()).unwrap();
        assert!(s.column(2).iter().all(|&v| v < 0.5));
    }
}
