use serde::{Deserialize, Serialize};

use super::softmax_in_place;

/// Gaussian naive Bayes with sklearn-style variance smoothing
/// (`1e-9` times the largest feature variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut count = vec![0.0; n_classes];
        let mut mean = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            count[c] += 1.0;
            for j in 0..d {
                mean[c][j] += row[j];
            }
        }
        for c in 0..n_classes {
            if count[c] > 0.0 {
                mean[c].iter_mut().for_each(|m| *m /= count[c]);
            }
        }
        let mut var = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            for j in 0..d {
                var[c][j] += (row[j] - mean[c][j]).powi(2);
            }
        }
        let mut global_max = 0.0f64;
        for j in 0..d {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            global_max = global_max.max(v);
        }
        let eps = 1e-9 * global_max.max(1e-300);
        for c in 0..n_classes {
            for j in 0..d {
                var[c][j] = if count[c] > 0.0 { var[c][j] / count[c] } else { 0.0 } + eps;
            }
        }
        let log_prior = count.iter().map(|&k| if k > 0.0 { (k / n).ln() } else { f64::NEG_INFINITY }).collect();
        Self { log_prior, mean, var }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.log_prior.len())
            .map(|c| {
                if self.log_prior[c] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = row
                    .iter()
                    .zip(&self.mean[c])
                    .zip(&self.var[c])
                    .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                    .sum();
                self.log_prior[c] + ll
            })
            .collect();
        softmax_in_place(&mut z);
        z
    }
}
