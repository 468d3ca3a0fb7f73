//! Shapley values of the coalition game whose value is the predicted
//! probability of one class, absent features taking their dataset mean.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{aligned, aligned_row, check_class, mask_row, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::{argmax, Predictor};
use crate::rng::substream;

/// Largest feature count accepted by [`exact_shapley`].
pub const MAX_EXACT_FEATURES: usize = 12;

fn resolve_class<P: Predictor + ?Sized>(model: &P, x: &[f64], class_index: Option<usize>) -> Result<usize, ExplainError> {
    match class_index {
        Some(c) => {
            check_class(model, c)?;
            Ok(c)
        }
        None => Ok(argmax(&model.predict_proba(x)?)),
    }
}

/// Exact Shapley values by enumerating all `2^n` coalitions.
pub fn exact_shapley<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    instance: &[f64],
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    let n = model.n_features();
    if n > MAX_EXACT_FEATURES {
        return Err(ExplainError::TooManyFeatures { n, max: MAX_EXACT_FEATURES });
    }
    let x = aligned_row(model, ds, instance)?;
    let ds = aligned(model, ds)?;
    let background = ds.means();
    let class = resolve_class(model, &x, class_index)?;

    let values = (0u32..1 << n)
        .into_par_iter()
        .map(|s| {
            let mask: Vec<bool> = (0..n).map(|i| s & (1 << i) != 0).collect();
            Ok(model.predict_proba(&mask_row(&mask, &x, &background))?[class])
        })
        .collect::<Result<Vec<f64>, ExplainError>>()?;

    // weight[k] = k! (n-k-1)! / n!
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    let weight: Vec<f64> = (0..n).map(|k| fact(k) * fact(n - k - 1) / fact(n)).collect();
    let phi = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..values.len())
                .filter(|s| s & bit == 0)
                .map(|s| weight[s.count_ones() as usize] * (values[s | bit] - values[s]))
                .sum()
        })
        .collect();
    Ok(AttributionVector::new("shap_exact", model.feature_names().to_vec(), phi))
}

/// Monte-Carlo permutation estimate of the Shapley values.
///
/// Permutations come in antithetic pairs (a random order and its reverse),
/// pair `p` drawing from substream `(seed, p)`; an odd `n_samples` leaves the
/// last order unpaired. Each order walks from the background to the instance,
/// so the estimate sums exactly to `f(instance) - f(background)`.
pub fn shapley_sampling<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    instance: &[f64],
    n_samples: usize,
    seed: u64,
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    if n_samples == 0 {
        return Err(ExplainError::InvalidParameter { name: "n_samples", reason: "must be at least 1".into() });
    }
    let x = aligned_row(model, ds, instance)?;
    let ds = aligned(model, ds)?;
    let background = ds.means();
    let class = resolve_class(model, &x, class_index)?;
    let n = x.len();
    let f_background = model.predict_proba(&background)?[class];

    let walk = |order: &[usize], acc: &mut [f64]| -> Result<(), ExplainError> {
        let mut z = background.clone();
        let mut prev = f_background;
        for &j in order {
            z[j] = x[j];
            let v = model.predict_proba(&z)?[class];
            acc[j] += v - prev;
            prev = v;
        }
        Ok(())
    };

    let n_pairs = n_samples.div_ceil(2);
    let partials = (0..n_pairs)
        .into_par_iter()
        .map(|p| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut substream(seed, p as u64));
            let mut acc = vec![0.0; n];
            walk(&order, &mut acc)?;
            if 2 * p + 1 < n_samples {
                order.reverse();
                walk(&order, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<Vec<f64>>, ExplainError>>()?;

    let mut phi = vec![0.0; n];
    for acc in &partials {
        for (p, a) in phi.iter_mut().zip(acc) {
            *p += a;
        }
    }
    phi.iter_mut().for_each(|p| *p /= n_samples as f64);
    Ok(AttributionVector::new("shap", model.feature_names().to_vec(), phi).with_seed(seed))
}

/// Global Shapley importance: mean absolute sampled Shapley value over up to
/// `n_instances` rows (a seeded subsample when the data is larger), each row
/// explained for its predicted class.
pub fn shapley_global<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    n_instances: usize,
    n_samples: usize,
    seed: u64,
) -> Result<AttributionVector, ExplainError> {
    if n_instances == 0 {
        return Err(ExplainError::InvalidParameter { name: "n_instances", reason: "must be at least 1".into() });
    }
    let ds = aligned(model, ds)?;
    let mut rows: Vec<usize> = (0..ds.n_samples()).collect();
    if rows.len() > n_instances {
        let mut rng = substream(seed, u64::MAX);
        for i in 0..n_instances {
            let j = rng.random_range(i..rows.len());
            rows.swap(i, j);
        }
        rows.truncate(n_instances);
        rows.sort_unstable();
    }
    let mut phi = vec![0.0; ds.n_features()];
    for (k, &r) in rows.iter().enumerate() {
        let local = shapley_sampling(model, &ds, ds.row(r), n_samples, crate::rng::derive_seed(seed, "shap", k as u64), None)?;
        for (p, v) in phi.iter_mut().zip(&local.phi) {
            *p += v.abs();
        }
    }
    phi.iter_mut().for_each(|p| *p /= rows.len() as f64);
    Ok(AttributionVector::new("shap", model.feature_names().to_vec(), phi).with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::FnPredictor;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    /// Dataset whose column means are all zero.
    fn centered(d: usize) -> Dataset {
        let rows = vec![vec![1.0; d], vec![-1.0; d]];
        Dataset::new(names(d), rows, vec![0, 1], vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn linear_model_exact_and_sampled() {
        let model = FnPredictor::binary(names(3), |x| 0.1 + 0.2 * x[0] + 0.0 * x[1] + 0.1 * x[2]);
        let ds = centered(3);
        let exact = exact_shapley(&model, &ds, &[1.0, 1.0, 1.0], Some(1)).unwrap();
        let sampled = shapley_sampling(&model, &ds, &[1.0, 1.0, 1.0], 16, 3, Some(1)).unwrap();
        for (got, want) in [exact.phi, sampled.phi].iter().flat_map(|p| p.iter().zip([0.2, 0.0, 0.1])) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_game() {
        let model = FnPredictor::binary(names(1), |x| 0.3 + 0.1 * x[0] * x[0]);
        let ds = centered(1);
        let av = exact_shapley(&model, &ds, &[2.0], Some(1)).unwrap();
        assert!((av.phi[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn symmetric_features_share_credit() {
        let model = FnPredictor::binary(names(2), |x| 0.2 * x[0] + 0.2 * x[1] + 0.1 * x[0] * x[1]);
        let av = exact_shapley(&model, &centered(2), &[0.7, 0.7], Some(1)).unwrap();
        assert!((av.phi[0] - av.phi[1]).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let model = FnPredictor::binary(names(13), |_| 0.5);
        let ds = centered(13);
        assert!(matches!(exact_shapley(&model, &ds, &[0.0; 13], None), Err(ExplainError::TooManyFeatures { n: 13, max: 12 })));
        let small = FnPredictor::binary(names(2), |_| 0.5);
        assert!(matches!(shapley_sampling(&small, &centered(2), &[0.0; 2], 10, 0, Some(2)), Err(ExplainError::InvalidClass { .. })));
        assert!(shapley_sampling(&small, &centered(2), &[0.0; 2], 0, 0, None).is_err());
    }

    #[test]
    fn pairwise_interactions_are_exact_with_antithetic_pairs() {
        let model = FnPredictor::binary(names(4), |x| 0.3 * x[0] * x[1] - 0.2 * x[2] * x[3] + 0.1 * x[0]);
        let ds = centered(4);
        let inst = [0.5, -1.0, 2.0, 0.25];
        let exact = exact_shapley(&model, &ds, &inst, Some(1)).unwrap();
        let sampled = shapley_sampling(&model, &ds, &inst, 2, 11, Some(1)).unwrap();
        for (a, b) in exact.phi.iter().zip(&sampled.phi) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
