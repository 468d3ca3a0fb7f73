use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Hyperparameters};

/// Multinomial logistic regression fitted by full-batch gradient descent on
/// standardized inputs, with an L2 penalty on the weights (not the biases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    center: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LogisticRegression {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, h: &Hyperparameters) -> Self {
        let lr = h.learning_rate.unwrap_or(0.5);
        let l2 = h.l2_penalty.unwrap_or(1e-4);
        let iters = h.max_iterations.unwrap_or(1000);
        let n = x.len();
        let d = x[0].len();
        let nf = n as f64;

        let center: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let s = (x.iter().map(|r| (r[j] - center[j]).powi(2)).sum::<f64>() / nf).sqrt();
                if s > 0.0 { s } else { 1.0 }
            })
            .collect();
        let z: Vec<Vec<f64>> = x.iter().map(|r| (0..d).map(|j| (r[j] - center[j]) / scale[j]).collect()).collect();

        let mut model = Self { center, scale, weights: vec![vec![0.0; d]; n_classes], bias: vec![0.0; n_classes] };
        let mut gw = vec![vec![0.0; d]; n_classes];
        let mut gb = vec![0.0; n_classes];
        let mut p = vec![0.0; n_classes];
        for _ in 0..iters {
            gw.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            gb.iter_mut().for_each(|v| *v = 0.0);
            for (row, &t) in z.iter().zip(y) {
                model.scores_into(row, &mut p);
                softmax_in_place(&mut p);
                for c in 0..n_classes {
                    let err = p[c] - if c == t { 1.0 } else { 0.0 };
                    gb[c] += err;
                    for j in 0..d {
                        gw[c][j] += err * row[j];
                    }
                }
            }
            for c in 0..n_classes {
                model.bias[c] -= lr * gb[c] / nf;
                for j in 0..d {
                    model.weights[c][j] -= lr * (gw[c][j] / nf + l2 * model.weights[c][j]);
                }
            }
        }
        model
    }

    fn scores_into(&self, z: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.bias[c] + self.weights[c].iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = row.iter().zip(&self.center).zip(&self.scale).map(|((v, c), s)| (v - c) / s).collect();
        let mut p = vec![0.0; self.bias.len()];
        self.scores_into(&z, &mut p);
        softmax_in_place(&mut p);
        p
    }
}
