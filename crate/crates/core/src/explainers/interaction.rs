use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{aligned, classes_for, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::Predictor;
use crate::rng::substream;

fn centered(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Friedman's total interaction statistic per feature:
///
/// `H²_j = Σ (F(x) - PD_j(x_j) - PD_{-j}(x_{-j}))² / Σ F(x)²`
///
/// with all three functions centered over the evaluation points. At most
/// `sample_cap` rows (a fixed shuffle, kept in data order) are evaluated; the
/// partial dependences average over the first `grid_points` of them. A zero
/// denominator scores 0.
pub fn interaction_importance<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    grid_points: usize,
    sample_cap: usize,
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    if grid_points == 0 {
        return Err(ExplainError::InvalidParameter { name: "grid_points", reason: "must be at least 1".into() });
    }
    if sample_cap == 0 {
        return Err(ExplainError::InvalidParameter { name: "sample_cap", reason: "must be at least 1".into() });
    }
    let classes = classes_for(model, class_index)?;
    let ds = aligned(model, ds)?;
    let d = ds.n_features();
    if d < 2 {
        return Ok(AttributionVector::new("fi", model.feature_names().to_vec(), vec![0.0; d]));
    }
    let mut picked: Vec<usize> = (0..ds.n_samples()).collect();
    if picked.len() > sample_cap {
        picked.shuffle(&mut substream(0, 0));
        picked.truncate(sample_cap);
        picked.sort_unstable();
    }
    let points: Vec<&[f64]> = picked.iter().map(|&i| ds.row(i)).collect();
    let inner = &points[..grid_points.min(points.len())];
    let full = points.iter().map(|p| model.predict_proba(p)).collect::<Result<Vec<_>, _>>()?;

    let phi = (0..d)
        .into_par_iter()
        .map(|j| {
            let k = model.n_classes();
            let mut pd_j = vec![vec![0.0; k]; points.len()];
            let mut pd_rest = vec![vec![0.0; k]; points.len()];
            let mut z = Vec::new();
            for (i, x) in points.iter().enumerate() {
                for w in inner {
                    // PD_j: x_j fixed, the rest averaged.
                    z.clear();
                    z.extend_from_slice(w);
                    z[j] = x[j];
                    for (a, p) in pd_j[i].iter_mut().zip(model.predict_proba(&z)?) {
                        *a += p;
                    }
                    // PD_-j: everything but x_j fixed.
                    z.clear();
                    z.extend_from_slice(x);
                    z[j] = w[j];
                    for (a, p) in pd_rest[i].iter_mut().zip(model.predict_proba(&z)?) {
                        *a += p;
                    }
                }
            }
            let m = inner.len() as f64;
            let mut total = 0.0;
            for &c in &classes {
                let mut f: Vec<f64> = full.iter().map(|p| p[c]).collect();
                let mut a: Vec<f64> = pd_j.iter().map(|p| p[c] / m).collect();
                let mut b: Vec<f64> = pd_rest.iter().map(|p| p[c] / m).collect();
                centered(&mut f);
                centered(&mut a);
                centered(&mut b);
                let num: f64 = (0..f.len()).map(|i| (f[i] - a[i] - b[i]).powi(2)).sum();
                let den: f64 = f.iter().map(|v| v * v).sum();
                total += if den > 0.0 { num / den } else { 0.0 };
            }
            Ok(total / classes.len() as f64)
        })
        .collect::<Result<Vec<f64>, ExplainError>>()?;
    Ok(AttributionVector::new("fi", model.feature_names().to_vec(), phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::FnPredictor;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    fn data(d: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..36).map(|i| (0..d).map(|j| ((i * (j + 1) * 7 + j) % 6) as f64 - 2.5).collect()).collect();
        Dataset::new(names(d), rows, (0..36).map(|i| i % 2).collect(), vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn additive_model_has_no_interaction() {
        let model = FnPredictor::binary(names(3), |x| 0.5 + 0.05 * x[0] + 0.01 * x[1] * x[1]);
        let av = interaction_importance(&model, &data(3), 36, 36, Some(1)).unwrap();
        for v in av.phi {
            assert!(v.abs() < 1e-20, "{v}");
        }
    }

    #[test]
    fn product_term_is_detected_on_its_features_only() {
        let model = FnPredictor::binary(names(3), |x| 0.5 + 0.02 * x[0] * x[1]);
        let av = interaction_importance(&model, &data(3), 36, 36, Some(1)).unwrap();
        assert!(av.phi[0] > 0.1 && av.phi[1] > 0.1);
        assert!(av.phi[2].abs() < 1e-20);
    }

    #[test]
    fn degenerate_cases() {
        let flat = FnPredictor::binary(names(3), |_| 0.5);
        assert_eq!(interaction_importance(&flat, &data(3), 10, 20, None).unwrap().phi, vec![0.0; 3]);
        let one = FnPredictor::binary(names(1), |x| x[0]);
        assert_eq!(interaction_importance(&one, &data(1), 10, 20, None).unwrap().phi, vec![0.0]);
        assert!(interaction_importance(&flat, &data(3), 0, 20, None).is_err());
    }
}
