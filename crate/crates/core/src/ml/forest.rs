//! Random forest of CART trees over bootstrap samples.
//!
//! Each node keeps, for every feature, the bootstrap sample indices sorted by
//! that feature's value; a split partitions those lists stably, so no node
//! ever re-sorts. Thresholds are midpoints between consecutive distinct
//! values and a sample goes left when `x <= threshold`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::model::Label;

pub const N_ESTIMATORS_RANGE: (usize, usize) = (2, 10);
pub const MAX_DEPTH_RANGE: (usize, usize) = (5, 20);
pub const MIN_SAMPLES_SPLIT_RANGE: (usize, usize) = (2, 20);
pub const MIN_SAMPLES_LEAF_RANGE: (usize, usize) = (2, 5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// Every feature is a candidate at every node.
    Auto,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub const ALL: [MaxFeatures; 3] = [MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Log2];

    /// Candidate count for `p` features; `ceil`, at least one.
    pub fn count(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::Auto => p,
            MaxFeatures::Sqrt => (p as f64).sqrt().ceil() as usize,
            MaxFeatures::Log2 => (p as f64).log2().ceil() as usize,
        };
        m.clamp(1, p.max(1))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaxFeatures::Auto => "auto",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub const ALL: [Criterion; 2] = [Criterion::Gini, Criterion::Entropy];

    /// Impurity of a node holding `counts = [face, scene]`.
    pub fn impurity(self, counts: [u32; 2]) -> f64 {
        let n = (counts[0] + counts[1]) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (p, q) = (counts[0] as f64 / n, counts[1] as f64 / n);
        match self {
            Criterion::Gini => 1.0 - p * p - q * q,
            Criterion::Entropy => {
                let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
                h(p) + h(q)
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfHyperParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
}

impl RfHyperParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("n_estimators", self.n_estimators, N_ESTIMATORS_RANGE),
            ("max_depth", self.max_depth, MAX_DEPTH_RANGE),
            ("min_samples_split", self.min_samples_split, MIN_SAMPLES_SPLIT_RANGE),
            ("min_samples_leaf", self.min_samples_leaf, MIN_SAMPLES_LEAF_RANGE),
        ];
        for (name, v, (lo, hi)) in checks {
            if v < lo || v > hi {
                return Err(Error::arg(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize, counts: [u32; 2] },
    Leaf { counts: [u32; 2] },
}

impl Node {
    pub fn counts(&self) -> [u32; 2] {
        match *self {
            Node::Split { counts, .. } | Node::Leaf { counts } => counts,
        }
    }
}

/// Nodes in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
                ref leaf @ Node::Leaf { .. } => return leaf,
            }
        }
    }

    /// Face fraction of the leaf `x` falls into.
    pub fn proba(&self, x: &[f64]) -> f64 {
        let [f, s] = self.leaf(x).counts();
        f as f64 / (f + s) as f64
    }

    /// Depth of the deepest leaf, root = 0.
    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub hp: RfHyperParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Bootstrap/feature-sampling seed of each tree.
    pub tree_seeds: Vec<u64>,
}

impl Forest {
    /// Mean over trees of the leaf face fraction.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Per-tree seed derived from the master seed by tree index (SplitMix64).
pub fn tree_seed(master: u64, tree: usize) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(tree as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Sample-weighted child impurity, `(n_l I_l + n_r I_r) / n`.
    pub score: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best split of feature `f` given its samples in ascending value order.
fn scan_feature(
    x: &Matrix,
    y: &[bool],
    f: usize,
    sorted: &[u32],
    total: [u32; 2],
    criterion: Criterion,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let n = sorted.len();
    let mut left = [0u32; 2];
    let mut best: Option<(f64, f64)> = None;
    for k in 1..n {
        let prev = sorted[k - 1] as usize;
        left[usize::from(!y[prev])] += 1;
        let (a, b) = (x.get(prev, f), x.get(sorted[k] as usize, f));
        if a == b || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let score = (k as f64 * criterion.impurity(left) + (n - k) as f64 * criterion.impurity(right)) / n as f64;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, midpoint(a, b)));
        }
    }
    best
}

fn class_counts(y: &[bool], samples: impl Iterator<Item = usize>) -> [u32; 2] {
    let mut c = [0u32; 2];
    for i in samples {
        c[usize::from(!y[i])] += 1;
    }
    c
}

fn face_flags(y: &[Label]) -> Vec<bool> {
    y.iter().map(|l| *l == Label::Face).collect()
}

fn sorted_by_feature(x: &Matrix, samples: &[usize], f: usize) -> Vec<u32> {
    let mut s: Vec<u32> = samples.iter().map(|&i| i as u32).collect();
    s.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
    s
}

/// Best split of `samples` (a multiset of row indices) over `features`,
/// scanned in the given order; the first strictly best candidate wins.
pub fn best_split(
    x: &Matrix,
    y: &[Label],
    samples: &[usize],
    features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<Split> {
    let flags = face_flags(y);
    let total = class_counts(&flags, samples.iter().copied());
    let mut best: Option<Split> = None;
    for &f in features {
        let sorted = sorted_by_feature(x, samples, f);
        if let Some((score, threshold)) = scan_feature(x, &flags, f, &sorted, total, criterion, min_samples_leaf.max(1))
        {
            if best.is_none_or(|b| score < b.score) {
                best = Some(Split { feature: f, threshold, score });
            }
        }
    }
    best
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    hp: &'a RfHyperParams,
    n_candidates: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Builder<'_> {
    /// `sorted[f]` lists this node's samples ordered by feature `f`.
    fn grow(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = sorted[0].len();
        let counts = class_counts(self.y, sorted[0].iter().map(|&i| i as usize));
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.hp.max_depth || n < self.hp.min_samples_split {
            return id;
        }

        let p = self.x.cols();
        let mut feats = rand::seq::index::sample(&mut self.rng, p, self.n_candidates).into_vec();
        feats.sort_unstable();
        let mut best: Option<Split> = None;
        for &f in &feats {
            if let Some((score, threshold)) =
                scan_feature(self.x, self.y, f, &sorted[f], counts, self.hp.criterion, self.hp.min_samples_leaf)
            {
                if best.is_none_or(|b| score < b.score) {
                    best = Some(Split { feature: f, threshold, score });
                }
            }
        }
        let Some(split) = best else { return id };

        for &i in &sorted[split.feature] {
            let i = i as usize;
            self.goes_left[i] = self.x.get(i, split.feature) <= split.threshold;
        }
        let (mut ls, mut rs) = (Vec::with_capacity(p), Vec::with_capacity(p));
        for list in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| self.goes_left[i as usize]);
            ls.push(l);
            rs.push(r);
        }
        let left = self.grow(ls, depth + 1);
        let right = self.grow(rs, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right, counts };
        id
    }
}

/// Bootstrap rows drawn by a tree with the given seed; the same RNG then
/// drives that tree's feature sampling.
pub fn bootstrap(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn build_tree(x: &Matrix, y: &[bool], hp: &RfHyperParams, seed: u64) -> Tree {
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let sorted: Vec<Vec<u32>> = (0..x.cols()).map(|f| sorted_by_feature(x, &samples, f)).collect();
    let mut b = Builder {
        x,
        y,
        hp,
        n_candidates: hp.max_features.count(x.cols()),
        rng,
        nodes: Vec::new(),
        goes_left: vec![false; n],
    };
    b.grow(sorted, 0);
    Tree { nodes: b.nodes }
}

pub fn rf_train(x: &Matrix, y: &[Label], hp: &RfHyperParams, seed: u64) -> Result<Forest> {
    hp.validate()?;
    if x.rows() != y.len() {
        return Err(Error::arg("row count differs from label count"));
    }
    if x.rows() < hp.min_samples_split {
        return Err(Error::arg(format!("{} samples is below min_samples_split {}", x.rows(), hp.min_samples_split)));
    }
    super::svm::check_two_classes(y, 1)?;
    if x.cols() == 0 {
        return Err(Error::arg("no feature columns"));
    }
    let flags = face_flags(y);
    let tree_seeds: Vec<u64> = (0..hp.n_estimators).map(|t| tree_seed(seed, t)).collect();
    let trees = tree_seeds.par_iter().map(|&s| build_tree(x, &flags, hp, s)).collect();
    Ok(Forest { hp: *hp, n_features: x.cols(), trees, tree_seeds })
}
