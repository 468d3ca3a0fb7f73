use rayon::prelude::*;

use super::{aligned, bin_of, classes_for, population_std, quantile_edges, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::{ModelError, Predictor};

/// Mean predicted probability vector over `rows` with column `j` set to `v`.
fn mean_with<P: Predictor + ?Sized>(model: &P, rows: &[Vec<f64>], j: usize, v: f64) -> Result<Vec<f64>, ModelError> {
    let mut acc = vec![0.0; model.n_classes()];
    let mut z = Vec::new();
    for row in rows {
        z.clone_from(row);
        z[j] = v;
        for (a, p) in acc.iter_mut().zip(model.predict_proba(&z)?) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= rows.len() as f64);
    Ok(acc)
}

/// Spread of the partial-dependence curve: the population std of the PD
/// values on `grid_points` equispaced points between the column min and max.
pub fn pdp_importance<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    grid_points: usize,
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    if grid_points < 2 {
        return Err(ExplainError::InvalidParameter { name: "grid_points", reason: "need at least 2".into() });
    }
    let classes = classes_for(model, class_index)?;
    let ds = aligned(model, ds)?;
    let phi = (0..ds.n_features())
        .into_par_iter()
        .map(|j| {
            let col = ds.column(j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                return Ok(0.0);
            }
            let curve = (0..grid_points)
                .map(|g| mean_with(model, ds.rows(), j, lo + (hi - lo) * g as f64 / (grid_points - 1) as f64))
                .collect::<Result<Vec<_>, _>>()?;
            let per_class: f64 = classes.iter().map(|&c| population_std(&curve.iter().map(|p| p[c]).collect::<Vec<_>>())).sum();
            Ok(per_class / classes.len() as f64)
        })
        .collect::<Result<Vec<f64>, ExplainError>>()?;
    Ok(AttributionVector::new("pdp", model.feature_names().to_vec(), phi))
}

/// Spread of the first-order accumulated local effects.
///
/// The column is cut at quantile edges; each bin's local effect is the mean
/// change in prediction when its member rows move from the lower to the upper
/// edge. The accumulated curve is interpolated linearly at every row's value,
/// centered, and summarized by its population std over rows. For a model
/// linear in `x_j` with slope `b` this equals `|b| * std(x_j)`.
pub fn ale_importance<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    n_bins: usize,
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    if n_bins == 0 {
        return Err(ExplainError::InvalidParameter { name: "n_bins", reason: "must be at least 1".into() });
    }
    let classes = classes_for(model, class_index)?;
    let ds = aligned(model, ds)?;
    let k = model.n_classes();
    let phi = (0..ds.n_features())
        .into_par_iter()
        .map(|j| {
            let col = ds.column(j);
            let edges = quantile_edges(&col, n_bins);
            if edges.len() < 2 {
                return Ok(0.0);
            }
            let bins: Vec<usize> = col.iter().map(|&x| bin_of(&edges, x)).collect();
            // ale[b] = accumulated effect at edges[b], per class.
            let mut ale = vec![vec![0.0; k]; edges.len()];
            let mut z = Vec::new();
            for b in 1..edges.len() {
                let mut effect = vec![0.0; k];
                let mut count = 0usize;
                for (row, _) in ds.rows().iter().zip(&bins).filter(|(_, &bin)| bin == b) {
                    z.clone_from(row);
                    z[j] = edges[b];
                    let hi = model.predict_proba(&z)?;
                    z[j] = edges[b - 1];
                    let lo = model.predict_proba(&z)?;
                    for c in 0..k {
                        effect[c] += hi[c] - lo[c];
                    }
                    count += 1;
                }
                for c in 0..k {
                    let local = if count > 0 { effect[c] / count as f64 } else { 0.0 };
                    ale[b][c] = ale[b - 1][c] + local;
                }
            }
            let mut total = 0.0;
            for &c in &classes {
                let values: Vec<f64> = col
                    .iter()
                    .zip(&bins)
                    .map(|(&x, &b)| {
                        let t = (x - edges[b - 1]) / (edges[b] - edges[b - 1]);
                        ale[b - 1][c] + t * (ale[b][c] - ale[b - 1][c])
                    })
                    .collect();
                // Centering does not change the std.
                total += population_std(&values);
            }
            Ok(total / classes.len() as f64)
        })
        .collect::<Result<Vec<f64>, ExplainError>>()?;
    Ok(AttributionVector::new("ale", model.feature_names().to_vec(), phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::FnPredictor;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    fn grid_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 39.0, ((i * 17) % 40) as f64 / 39.0, 2.0]).collect();
        let targets = (0..40).map(|i| i % 2).collect();
        Dataset::new(names(3), rows, targets, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn pdp_of_linear_model() {
        let model = FnPredictor::binary(names(3), |x| 0.2 + 0.3 * x[0] + 0.1 * x[1]);
        let av = pdp_importance(&model, &grid_data(), 5, Some(1)).unwrap();
        // Grid 0, .25, .5, .75, 1 scaled by the slope: std = slope * sqrt(0.125).
        assert!((av.phi[0] - 0.3 * 0.125f64.sqrt()).abs() < 1e-12);
        assert!((av.phi[1] - 0.1 * 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(av.phi[2], 0.0);
        // Both classes move by the same amount, so averaging changes nothing.
        let both = pdp_importance(&model, &grid_data(), 5, None).unwrap();
        assert!((both.phi[0] - av.phi[0]).abs() < 1e-12);
    }

    #[test]
    fn ale_of_linear_model_is_slope_times_std() {
        let ds = grid_data();
        let model = FnPredictor::binary(names(3), |x| 0.2 + 0.3 * x[0] - 0.4 * x[1]);
        let av = ale_importance(&model, &ds, 8, Some(1)).unwrap();
        let std0 = population_std(&ds.column(0));
        let std1 = population_std(&ds.column(1));
        assert!((av.phi[0] - 0.3 * std0).abs() < 1e-12);
        assert!((av.phi[1] - 0.4 * std1).abs() < 1e-12);
        assert_eq!(av.phi[2], 0.0);
    }

    #[test]
    fn unused_feature_scores_zero() {
        let model = FnPredictor::binary(names(3), |x| if x[0] > 0.5 { 0.9 } else { 0.1 });
        let ds = grid_data();
        assert_eq!(pdp_importance(&model, &ds, 10, None).unwrap().phi[1], 0.0);
        assert_eq!(ale_importance(&model, &ds, 10, None).unwrap().phi[1], 0.0);
    }

    #[test]
    fn parameter_validation() {
        let model = FnPredictor::binary(names(3), |_| 0.5);
        assert!(pdp_importance(&model, &grid_data(), 1, None).is_err());
        assert!(ale_importance(&model, &grid_data(), 0, None).is_err());
        assert!(matches!(pdp_importance(&model, &grid_data(), 4, Some(5)), Err(ExplainError::InvalidClass { .. })));
    }
}
