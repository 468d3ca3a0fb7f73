//! Binary decision trees grown by exhaustive midpoint-threshold search.
//!
//! Candidate splits are scanned in ascending `(feature index, threshold)`
//! order and only a strictly better gain replaces the incumbent, which makes
//! tie-breaking deterministic. Rows with `x <= threshold` go left.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Impurity decrease (or loss reduction) achieved by this split,
        /// weighted by the number of samples reaching the node.
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Leaf payload reached by `row`.
    pub fn leaf_value(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Total split gain attributed to each feature.
    pub fn gain_by_feature(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                out[*feature] += gain;
            }
        }
        out
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn per node; `None` uses all of them.
    pub max_features: Option<usize>,
}

/// Node statistics accumulated while sweeping a sorted feature.
trait Stats: Clone {
    fn add(&mut self, i: usize);
    fn remove(&mut self, i: usize);
    /// Larger is better; gain is `score(left) + score(right) - score(parent)`.
    fn score(&self) -> f64;
    fn leaf(&self) -> Vec<f64>;
    fn is_pure(&self) -> bool;
    /// Same accumulator with no samples.
    fn cleared(&self) -> Self;
}

#[derive(Clone)]
struct ClassCounts<'a> {
    y: &'a [usize],
    counts: Vec<f64>,
    n: f64,
}

impl Stats for ClassCounts<'_> {
    fn add(&mut self, i: usize) {
        self.counts[self.y[i]] += 1.0;
        self.n += 1.0;
    }
    fn remove(&mut self, i: usize) {
        self.counts[self.y[i]] -= 1.0;
        self.n -= 1.0;
    }
    // -n * gini = sum(c^2)/n - n
    fn score(&self) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        self.counts.iter().map(|c| c * c).sum::<f64>() / self.n - self.n
    }
    fn leaf(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.n).collect()
    }
    fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0.0).count() <= 1
    }
    fn cleared(&self) -> Self {
        Self { y: self.y, counts: vec![0.0; self.counts.len()], n: 0.0 }
    }
}

#[derive(Clone)]
struct GradStats<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    g: f64,
    h: f64,
    lambda: f64,
}

impl Stats for GradStats<'_> {
    fn add(&mut self, i: usize) {
        self.g += self.grad[i];
        self.h += self.hess[i];
    }
    fn remove(&mut self, i: usize) {
        self.g -= self.grad[i];
        self.h -= self.hess[i];
    }
    fn score(&self) -> f64 {
        self.g * self.g / (self.h + self.lambda)
    }
    fn leaf(&self) -> Vec<f64> {
        vec![-self.g / (self.h + self.lambda)]
    }
    fn is_pure(&self) -> bool {
        false
    }
    fn cleared(&self) -> Self {
        Self { g: 0.0, h: 0.0, ..self.clone() }
    }
}

/// Grows a CART classifier with Gini impurity on the (possibly repeated)
/// sample indices `sample`. Leaves hold class proportions.
pub(crate) fn grow_classifier(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    sample: &[usize],
    params: GrowParams,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let mut root = ClassCounts { y, counts: vec![0.0; n_classes], n: 0.0 };
    for &i in sample {
        root.add(i);
    }
    // Zero-gain splits are allowed so impure nodes can still be separated (XOR-like data).
    grow(x, sample.to_vec(), root, params, rng, -1e-9)
}

/// Grows a second-order gradient regression tree; leaves hold
/// `-G / (H + lambda)`.
pub(crate) fn grow_gradient(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
    params: GrowParams,
) -> Tree {
    let sample: Vec<usize> = (0..x.len()).collect();
    let mut root = GradStats { grad, hess, g: 0.0, h: 0.0, lambda };
    for &i in &sample {
        root.add(i);
    }
    grow(x, sample, root, params, None, 1e-12)
}

struct Builder<'a, S> {
    x: &'a [Vec<f64>],
    params: GrowParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
    min_gain: f64,
    template: S,
}

fn grow<S: Stats>(
    x: &[Vec<f64>],
    sample: Vec<usize>,
    root: S,
    params: GrowParams,
    rng: Option<&mut ChaCha8Rng>,
    min_gain: f64,
) -> Tree {
    let mut b = Builder { x, params, rng, nodes: Vec::new(), min_gain, template: root.clone() };
    b.build(sample, root, 0);
    Tree { nodes: b.nodes }
}

impl<S: Stats> Builder<'_, S> {
    fn build(&mut self, idx: Vec<usize>, stats: S, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: stats.leaf() });
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || idx.len() < self.params.min_samples_split.max(2) || stats.is_pure() {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(&idx, &stats) else {
            return id;
        };
        let (li, ri): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let mut ls = self.empty();
        li.iter().for_each(|&i| ls.add(i));
        let mut rs = self.empty();
        ri.iter().for_each(|&i| rs.add(i));
        let left = self.build(li, ls, depth + 1);
        let right = self.build(ri, rs, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right, gain };
        id
    }

    fn empty(&self) -> S {
        self.template.cleared()
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        let mut feats: Vec<usize> = (0..d).collect();
        if let (Some(k), Some(rng)) = (self.params.max_features, self.rng.as_deref_mut()) {
            if k < d {
                feats.shuffle(rng);
                feats.truncate(k.max(1));
                feats.sort_unstable();
            }
        }
        feats
    }

    fn best_split(&mut self, idx: &[usize], parent: &S) -> Option<(usize, f64, f64)> {
        let parent_score = parent.score();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            let x = self.x;
            order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            let mut left = self.empty();
            let mut right = parent.clone();
            for w in 0..order.len() - 1 {
                let i = order[w];
                left.add(i);
                right.remove(i);
                let (a, b) = (x[i][f], x[order[w + 1]][f]);
                if a == b {
                    continue;
                }
                let gain = left.score() + right.score() - parent_score;
                if gain < self.min_gain {
                    continue;
                }
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, midpoint(a, b), gain));
                }
            }
        }
        best
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Adjacent floats: keep the threshold strictly below `b`.
    if m >= b { a } else { m }
}
