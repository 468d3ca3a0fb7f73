use super::{aligned, bin_of, classes_for, population_variance, quantile_edges, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::Predictor;

const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 200;

struct Fit {
    /// Component values at each row, per feature.
    components: Vec<Vec<f64>>,
    rms: f64,
    converged: bool,
}

/// Backfits an additive model of piecewise-constant components on `y`.
fn backfit(bins: &[Option<Vec<usize>>], n_cells: &[usize], y: &[f64]) -> Fit {
    let n = y.len();
    let d = bins.len();
    if y.iter().all(|v| *v == y[0]) {
        return Fit { components: vec![vec![0.0; n]; d], rms: 0.0, converged: true };
    }
    let intercept = y.iter().sum::<f64>() / n as f64;
    let mut components = vec![vec![0.0; n]; d];
    let mut residual: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for j in 0..d {
            let Some(bin) = &bins[j] else { continue };
            // Partial residual for feature j is residual + g_j.
            let mut sum = vec![0.0; n_cells[j]];
            let mut count = vec![0usize; n_cells[j]];
            for i in 0..n {
                sum[bin[i]] += residual[i] + components[j][i];
                count[bin[i]] += 1;
            }
            let cell: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
            let mean = (0..n).map(|i| cell[bin[i]]).sum::<f64>() / n as f64;
            for i in 0..n {
                let new = cell[bin[i]] - mean;
                let delta = new - components[j][i];
                change = change.max(delta.abs());
                residual[i] -= delta;
                components[j][i] = new;
            }
        }
        if change < TOLERANCE {
            converged = true;
            break;
        }
    }
    let rms = (residual.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Fit { components, rms, converged }
}

/// Importance from an additive surrogate: the model's class probability is
/// backfitted with one piecewise-constant function per feature (quantile
/// bins) and each feature scores the variance of its component over the
/// rows. `epsilon` is the RMS residual of the additive fit.
pub fn gam_importance<P: Predictor + ?Sized>(
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
    let d = ds.n_features();
    let mut bins = Vec::with_capacity(d);
    let mut n_cells = Vec::with_capacity(d);
    for j in 0..d {
        let col = ds.column(j);
        let edges = quantile_edges(&col, n_bins);
        if edges.len() < 2 {
            bins.push(None);
            n_cells.push(0);
        } else {
            bins.push(Some(col.iter().map(|&x| bin_of(&edges, x) - 1).collect::<Vec<_>>()));
            n_cells.push(edges.len() - 1);
        }
    }
    let probs = ds.rows().iter().map(|r| model.predict_proba(r)).collect::<Result<Vec<_>, _>>()?;

    let mut phi = vec![0.0; d];
    let mut eps = 0.0;
    let mut warnings = Vec::new();
    for &c in &classes {
        let y: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let fit = backfit(&bins, &n_cells, &y);
        if !fit.converged {
            warnings.push(format!("backfitting for class {c} stopped after {MAX_SWEEPS} sweeps"));
        }
        for (p, g) in phi.iter_mut().zip(&fit.components) {
            *p += population_variance(g);
        }
        eps += fit.rms;
    }
    let m = classes.len() as f64;
    phi.iter_mut().for_each(|p| *p /= m);
    let mut av = AttributionVector::new("gam", model.feature_names().to_vec(), phi).with_epsilon(eps / m);
    av.warnings = warnings;
    Ok(av)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::FnPredictor;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 6) as f64, ((i / 6) % 5) as f64, 1.0]).collect();
        let targets = (0..60).map(|i| i % 2).collect();
        Dataset::new(names(3), rows, targets, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn additive_model_is_recovered_exactly() {
        // Balanced design; the lowest bin holds the two smallest values, so
        // components constant on bins are recovered exactly.
        let f0 = |v: f64| 0.05 * v.max(1.0);
        let f1 = |v: f64| 0.02 * v.max(1.0).powi(2);
        let model = FnPredictor::binary(names(3), move |x| 0.1 + f0(x[0]) + f1(x[1]));
        let ds = data();
        let av = gam_importance(&model, &ds, 10, Some(1)).unwrap();
        let g0: Vec<f64> = ds.column(0).into_iter().map(f0).collect();
        let g1: Vec<f64> = ds.column(1).into_iter().map(f1).collect();
        assert!((av.phi[0] - population_variance(&g0)).abs() < 1e-12);
        assert!((av.phi[1] - population_variance(&g1)).abs() < 1e-12);
        assert_eq!(av.phi[2], 0.0);
        assert!(av.residual_epsilon.unwrap() < 1e-9);
        assert!(av.warnings.is_empty());
    }

    #[test]
    fn constant_model_gives_zeros() {
        let model = FnPredictor::binary(names(3), |_| 0.4);
        let av = gam_importance(&model, &data(), 4, None).unwrap();
        assert_eq!(av.phi, vec![0.0; 3]);
        assert_eq!(av.residual_epsilon, Some(0.0));
    }

    #[test]
    fn interaction_leaves_residual() {
        let model = FnPredictor::binary(names(3), |x| 0.02 * x[0] * x[1]);
        let av = gam_importance(&model, &data(), 10, Some(1)).unwrap();
        assert!(av.residual_epsilon.unwrap() > 1e-3);
    }
}
