use serde::{Deserialize, Serialize};

use super::tree::{grow_gradient, GrowParams, Tree};
use super::{softmax_in_place, Hyperparameters};

/// Softmax gradient boosting: each round fits one second-order regression
/// tree per class to the multinomial log-loss gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: Vec<f64>,
    learning_rate: f64,
    /// `rounds[r][c]` is the tree for class `c` in round `r`.
    rounds: Vec<Vec<Tree>>,
}

impl GradientBoosting {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, h: &Hyperparameters) -> Self {
        let lr = h.learning_rate.unwrap_or(0.1);
        let n_rounds = h.n_rounds.unwrap_or(100);
        let lambda = h.l2_penalty.unwrap_or(1.0);
        let params = GrowParams { max_depth: Some(h.max_depth.unwrap_or(3)), min_samples_split: 2, max_features: None };
        let n = x.len();

        let mut counts = vec![0.0; n_classes];
        y.iter().for_each(|&t| counts[t] += 1.0);
        // Log-prior start, floored so absent classes stay finite.
        let init: Vec<f64> = counts.iter().map(|&c| ((c + 1e-3) / (n as f64 + 1e-3 * n_classes as f64)).ln()).collect();

        let mut scores: Vec<Vec<f64>> = vec![init.clone(); n];
        let mut rounds = Vec::with_capacity(n_rounds);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..n_rounds {
            let probs: Vec<Vec<f64>> = scores
                .iter()
                .map(|s| {
                    let mut p = s.clone();
                    softmax_in_place(&mut p);
                    p
                })
                .collect();
            let mut round = Vec::with_capacity(n_classes);
            for c in 0..n_classes {
                for i in 0..n {
                    let p = probs[i][c];
                    grad[i] = p - if y[i] == c { 1.0 } else { 0.0 };
                    hess[i] = (p * (1.0 - p)).max(1e-12);
                }
                let tree = grow_gradient(x, &grad, &hess, lambda, params);
                for (i, row) in x.iter().enumerate() {
                    scores[i][c] += lr * tree.leaf_value(row)[0];
                }
                round.push(tree);
            }
            rounds.push(round);
        }
        Self { init, learning_rate: lr, rounds }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut s = self.init.clone();
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                s[c] += self.learning_rate * tree.leaf_value(row)[0];
            }
        }
        softmax_in_place(&mut s);
        s
    }
}
