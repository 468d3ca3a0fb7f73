use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_classifier, GrowParams, Tree};
use super::Hyperparameters;
use crate::rng::substream;

/// Bagged CART trees with per-node feature subsampling. Probabilities are the
/// mean of the member trees' leaf distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, h: &Hyperparameters, seed: u64) -> Self {
        let n = x.len();
        let d = x[0].len();
        let n_trees = h.n_trees.unwrap_or(100);
        let max_features = h.max_features.unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1)).min(d);
        let params = GrowParams { max_depth: h.max_depth, min_samples_split: 2, max_features: Some(max_features) };
        // Each member draws from its own substream, so the result does not
        // depend on how rayon schedules the work.
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = substream(seed, t as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                grow_classifier(x, y, n_classes, &sample, params, Some(&mut rng))
            })
            .collect();
        Self { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.trees[0].leaf_value(row).len()];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.leaf_value(row)) {
                *a += v;
            }
        }
        let m = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }
}
