//! CART trees with Gini or squared-error splitting, random forests and
//! gradient boosting on logistic loss.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::linear::{logit_bce, sigmoid};
use super::params::{Params, Tensor};
use super::{check_training_set, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng::{rng_for, Rng};

const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    /// `None` marks a leaf.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
}

/// Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node {
                feature: None,
                threshold: 0.0,
                left: 0,
                right: 0,
                value,
            }],
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match n.feature {
                None => return n.value,
                Some(f) => i = if x[f] <= n.threshold { n.left } else { n.right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            match n.feature {
                None => 0,
                Some(_) => 1 + go(t, n.left).max(go(t, n.right)),
            }
        }
        go(self, 0)
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes.iter().filter_map(|n| n.feature).max()
    }

    fn push_params(trees: &[Tree], p: &mut Params) {
        let mut feature = Vec::new();
        let mut threshold = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut value = Vec::new();
        let mut offsets = Vec::with_capacity(trees.len() + 1);
        offsets.push(0);
        for t in trees {
            for n in &t.nodes {
                feature.push(n.feature.map_or(-1.0, |f| f as f64));
                threshold.push(n.threshold);
                left.push(n.left as f64);
                right.push(n.right as f64);
                value.push(n.value);
            }
            offsets.push(feature.len());
        }
        p.put("node_feature", Tensor::vector(feature))
            .put("node_threshold", Tensor::vector(threshold))
            .put("node_left", Tensor::vector(left))
            .put("node_right", Tensor::vector(right))
            .put("node_value", Tensor::vector(value))
            .put("tree_offsets", Tensor::indices(&offsets));
    }

    fn pull_params(p: &Params) -> Result<Vec<Tree>> {
        let feature = p.vector("node_feature")?;
        let threshold = p.vector("node_threshold")?;
        let left = p.indices("node_left")?;
        let right = p.indices("node_right")?;
        let value = p.vector("node_value")?;
        let offsets = p.indices("tree_offsets")?;
        let n = feature.len();
        if [threshold.len(), left.len(), right.len(), value.len()].iter().any(|&l| l != n)
            || offsets.last() != Some(&n)
            || offsets.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Serialization("inconsistent tree tensors".into()));
        }
        let mut trees = Vec::new();
        for w in offsets.windows(2) {
            let size = w[1] - w[0];
            let mut nodes = Vec::with_capacity(size);
            for i in w[0]..w[1] {
                let leaf = feature[i] < 0.0;
                if !leaf && (left[i] >= size || right[i] >= size) {
                    return Err(Error::Serialization("tree child index out of range".into()));
                }
                nodes.push(Node {
                    feature: if leaf { None } else { Some(feature[i] as usize) },
                    threshold: threshold[i],
                    left: left[i],
                    right: right[i],
                    value: value[i],
                });
            }
            trees.push(Tree { nodes });
        }
        Ok(trees)
    }
}

/// Split statistics for a set of samples.
trait Criterion {
    type Stats: Copy + Default;
    fn add(&self, s: &mut Self::Stats, i: usize);
    fn sub(&self, s: &mut Self::Stats, i: usize);
    /// Higher is better; a split's gain is `score(l) + score(r) - score(parent)`.
    fn score(&self, s: &Self::Stats) -> f64;
    fn leaf(&self, s: &Self::Stats) -> f64;
    fn is_pure(&self, s: &Self::Stats) -> bool;
}

struct Gini<'a> {
    y: &'a [f64],
}

impl Criterion for Gini<'_> {
    /// (count, positives)
    type Stats = (f64, f64);
    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0 += 1.0;
        s.1 += self.y[i];
    }
    fn sub(&self, s: &mut Self::Stats, i: usize) {
        s.0 -= 1.0;
        s.1 -= self.y[i];
    }
    fn score(&self, s: &Self::Stats) -> f64 {
        if s.0 <= 0.0 {
            return 0.0;
        }
        let p = s.1 / s.0;
        -s.0 * (1.0 - p * p - (1.0 - p) * (1.0 - p))
    }
    fn leaf(&self, s: &Self::Stats) -> f64 {
        if s.0 > 0.0 {
            s.1 / s.0
        } else {
            0.5
        }
    }
    fn is_pure(&self, s: &Self::Stats) -> bool {
        s.1 == 0.0 || s.1 == s.0
    }
}

struct Newton<'a> {
    residual: &'a [f64],
    hessian: &'a [f64],
}

impl Criterion for Newton<'_> {
    /// (count, sum residual, sum hessian)
    type Stats = (f64, f64, f64);
    fn add(&self, s: &mut Self::Stats, i: usize) {
        s.0 += 1.0;
        s.1 += self.residual[i];
        s.2 += self.hessian[i];
    }
    fn sub(&self, s: &mut Self::Stats, i: usize) {
        s.0 -= 1.0;
        s.1 -= self.residual[i];
        s.2 -= self.hessian[i];
    }
    fn score(&self, s: &Self::Stats) -> f64 {
        if s.0 <= 0.0 {
            0.0
        } else {
            s.1 * s.1 / s.0
        }
    }
    fn leaf(&self, s: &Self::Stats) -> f64 {
        if s.2 > 1e-12 {
            s.1 / s.2
        } else {
            0.0
        }
    }
    fn is_pure(&self, _: &Self::Stats) -> bool {
        false
    }
}

struct Builder<'a, C: Criterion> {
    x: &'a [Vec<f64>],
    criterion: C,
    max_depth: usize,
    min_leaf: usize,
    /// Features examined per node; `d` disables sampling.
    per_node: usize,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
}

impl<C: Criterion> Builder<'_, C> {
    fn stats(&self, idx: &[usize]) -> C::Stats {
        let mut s = C::Stats::default();
        for &i in idx {
            self.criterion.add(&mut s, i);
        }
        s
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match self.rng.as_deref_mut() {
            Some(rng) if self.per_node < d => {
                let mut f = sample(rng, d, self.per_node).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], parent: &C::Stats) -> Option<(usize, f64)> {
        let parent_score = self.criterion.score(parent);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            let x = self.x;
            order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            let mut left = C::Stats::default();
            let mut right = *parent;
            for k in 0..order.len() - 1 {
                self.criterion.add(&mut left, order[k]);
                self.criterion.sub(&mut right, order[k]);
                let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
                if lo >= hi || k + 1 < self.min_leaf || order.len() - k - 1 < self.min_leaf {
                    continue;
                }
                let gain = self.criterion.score(&left) + self.criterion.score(&right) - parent_score;
                if gain > GAIN_TOLERANCE && best.is_none_or(|(g, _, _)| gain > g + GAIN_TOLERANCE) {
                    let mut thr = 0.5 * (lo + hi);
                    if thr >= hi {
                        thr = lo;
                    }
                    best = Some((gain, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let stats = self.stats(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: self.criterion.leaf(&stats),
        });
        if depth >= self.max_depth || idx.len() < 2 * self.min_leaf.max(1) || self.criterion.is_pure(&stats) {
            return id;
        }
        let Some((f, thr)) = self.best_split(&idx, &stats) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][f] <= thr);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        let node = &mut self.nodes[id];
        node.feature = Some(f);
        node.threshold = thr;
        node.left = left;
        node.right = right;
        id
    }
}

fn targets(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| l.target()).collect()
}

fn grow_classifier(
    x: &[Vec<f64>],
    y01: &[f64],
    idx: Vec<usize>,
    max_depth: usize,
    min_leaf: usize,
    per_node: usize,
    rng: Option<&mut Rng>,
) -> Tree {
    let mut b = Builder {
        x,
        criterion: Gini { y: y01 },
        max_depth,
        min_leaf,
        per_node,
        rng,
        nodes: Vec::new(),
    };
    b.grow(idx, 0);
    Tree { nodes: b.nodes }
}

fn tree_proba(t: &Tree, x: &[f64]) -> [f64; 2] {
    let p = t.evaluate(x);
    [1.0 - p, p]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtreeHyper {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for DtreeHyper {
    fn default() -> Self {
        DtreeHyper {
            max_depth: Some(10),
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub tree: Tree,
    pub n_features: usize,
}

pub fn train_dtree(x: &[Vec<f64>], y: &[Label], hyper: &DtreeHyper) -> Result<DecisionTree> {
    let d = check_training_set(x, y)?;
    let y01 = targets(y);
    let tree = grow_classifier(
        x,
        &y01,
        (0..x.len()).collect(),
        hyper.max_depth.unwrap_or(usize::MAX),
        hyper.min_leaf.max(1),
        d,
        None,
    );
    Ok(DecisionTree { tree, n_features: d })
}

impl DecisionTree {
    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        Tree::push_params(std::slice::from_ref(&self.tree), &mut p);
        p.put("n_features", Tensor::scalar(self.n_features as f64));
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        let mut trees = Tree::pull_params(p)?;
        if trees.len() != 1 {
            return Err(Error::Serialization("decision tree needs exactly one tree".into()));
        }
        Ok(DecisionTree {
            tree: trees.remove(0),
            n_features: p.scalar("n_features")? as usize,
        })
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        tree_proba(&self.tree, x)
    }
}

/// Fraction of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFrac {
    /// `ceil(sqrt(d))`
    #[default]
    Sqrt,
    Fraction(f64),
}

impl FeatureFrac {
    pub fn count(self, d: usize) -> usize {
        let k = match self {
            FeatureFrac::Sqrt => (d as f64).sqrt().ceil() as usize,
            FeatureFrac::Fraction(f) => (f * d as f64).ceil() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RforestHyper {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub feature_frac: FeatureFrac,
    pub bootstrap: bool,
}

impl Default for RforestHyper {
    fn default() -> Self {
        RforestHyper {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            feature_frac: FeatureFrac::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Accuracy of out-of-bag votes; `None` without bootstrap or when no
    /// sample was ever left out.
    pub oob_accuracy: Option<f64>,
}

pub fn train_rforest(x: &[Vec<f64>], y: &[Label], hyper: &RforestHyper, seed: u64) -> Result<RandomForest> {
    let d = check_training_set(x, y)?;
    let n = x.len();
    let y01 = targets(y);
    let per_node = hyper.feature_frac.count(d);
    let mut trees = Vec::with_capacity(hyper.n_trees);
    let mut oob_sum = vec![0.0; n];
    let mut oob_votes = vec![0usize; n];
    for t in 0..hyper.n_trees {
        let mut rng = rng_for(seed, &format!("rforest/tree/{t}"));
        let idx: Vec<usize> = if hyper.bootstrap {
            use rand::Rng as _;
            let mut v: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            v.sort_unstable();
            v
        } else {
            (0..n).collect()
        };
        let mut in_bag = vec![false; n];
        for &i in &idx {
            in_bag[i] = true;
        }
        let tree = grow_classifier(
            x,
            &y01,
            idx,
            hyper.max_depth.unwrap_or(usize::MAX),
            hyper.min_leaf.max(1),
            per_node,
            Some(&mut rng),
        );
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_sum[i] += tree.evaluate(&x[i]);
            oob_votes[i] += 1;
        }
        trees.push(tree);
    }
    let scored: Vec<usize> = (0..n).filter(|&i| oob_votes[i] > 0).collect();
    let oob_accuracy = (!scored.is_empty()).then(|| {
        let hits = scored
            .iter()
            .filter(|&&i| {
                let p = oob_sum[i] / oob_votes[i] as f64;
                Label::from_probabilities([1.0 - p, p]) == y[i]
            })
            .count();
        hits as f64 / scored.len() as f64
    });
    Ok(RandomForest {
        trees,
        n_features: d,
        oob_accuracy,
    })
}

impl RandomForest {
    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        Tree::push_params(&self.trees, &mut p);
        p.put("n_features", Tensor::scalar(self.n_features as f64));
        if let Some(a) = self.oob_accuracy {
            p.put("oob_accuracy", Tensor::scalar(a));
        }
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        Ok(RandomForest {
            trees: Tree::pull_params(p)?,
            n_features: p.scalar("n_features")? as usize,
            oob_accuracy: p.scalar("oob_accuracy").ok(),
        })
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>() / self.trees.len().max(1) as f64;
        [1.0 - p, p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GboostHyper {
    pub n_rounds: usize,
    pub lr: f64,
    pub depth: usize,
}

impl Default for GboostHyper {
    fn default() -> Self {
        GboostHyper {
            n_rounds: 100,
            lr: 0.1,
            depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    pub f0: f64,
    pub lr: f64,
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Mean training log loss after F0 and after each round.
    pub loss_trace: Vec<f64>,
}

const PRIOR_CLAMP: f64 = 1e-6;

pub fn train_gboost(x: &[Vec<f64>], y: &[Label], hyper: &GboostHyper) -> Result<GradientBoosting> {
    let d = check_training_set(x, y)?;
    let n = x.len();
    let y01 = targets(y);
    let mean = (y01.iter().sum::<f64>() / n as f64).clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP);
    let f0 = (mean / (1.0 - mean)).ln();
    let mut f = vec![f0; n];
    let loss = |f: &[f64]| f.iter().zip(&y01).map(|(&z, &t)| logit_bce(z, t)).sum::<f64>() / n as f64;
    let mut loss_trace = vec![loss(&f)];
    let mut trees = Vec::with_capacity(hyper.n_rounds);
    for _ in 0..hyper.n_rounds {
        let p: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        let residual: Vec<f64> = y01.iter().zip(&p).map(|(t, p)| t - p).collect();
        let hessian: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let mut b = Builder {
            x,
            criterion: Newton {
                residual: &residual,
                hessian: &hessian,
            },
            max_depth: hyper.depth,
            min_leaf: 1,
            per_node: d,
            rng: None,
            nodes: Vec::new(),
        };
        b.grow((0..n).collect(), 0);
        let tree = Tree { nodes: b.nodes };
        for (fi, row) in f.iter_mut().zip(x) {
            *fi += hyper.lr * tree.evaluate(row);
        }
        loss_trace.push(loss(&f));
        trees.push(tree);
    }
    Ok(GradientBoosting {
        f0,
        lr: hyper.lr,
        trees,
        n_features: d,
        loss_trace,
    })
}

impl GradientBoosting {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.f0 + self.lr * self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>()
    }

    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        p.put("f0", Tensor::scalar(self.f0))
            .put("lr", Tensor::scalar(self.lr))
            .put("n_features", Tensor::scalar(self.n_features as f64))
            .put("loss_trace", Tensor::vector(self.loss_trace.clone()));
        if !self.trees.is_empty() {
            Tree::push_params(&self.trees, &mut p);
        }
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        let trees = if p.tensors.contains_key("tree_offsets") {
            Tree::pull_params(p)?
        } else {
            Vec::new()
        };
        Ok(GradientBoosting {
            f0: p.scalar("f0")?,
            lr: p.scalar("lr")?,
            trees,
            n_features: p.scalar("n_features")? as usize,
            loss_trace: p.vector("loss_trace")?,
        })
    }
}

impl Classifier for GradientBoosting {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = sigmoid(self.raw_score(x));
        [1.0 - p, p]
    }
}
