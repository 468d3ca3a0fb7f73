use rand::Rng;

use super::{aligned, aligned_row, check_class, AttributionVector, ExplainError, PerturbationSample};
use crate::data::Dataset;
use crate::linalg::cholesky_solve;
use crate::model_zoo::{argmax, Predictor};
use crate::rng::substream;

pub(crate) const DEFAULT_RIDGE: f64 = 1e-3;
const MAX_RIDGE_DOUBLINGS: u32 = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct LimeParams {
    pub n_perturb: usize,
    /// Kernel width; `None` means `0.75 * sqrt(M)`.
    pub kernel_width: Option<f64>,
    /// Initial ridge penalty on the coefficients (the intercept is not
    /// penalized). Doubled until the normal equations factorize.
    pub ridge: f64,
}

impl Default for LimeParams {
    fn default() -> Self {
        Self { n_perturb: 1000, kernel_width: None, ridge: DEFAULT_RIDGE }
    }
}

/// Local linear surrogate on binary coalition masks.
///
/// Sample 0 is the instance itself; the remaining masks switch each feature
/// on with probability 1/2. Switched-off features take the dataset mean. The
/// surrogate is a kernel-weighted ridge regression of the class probability
/// on the mask bits; `phi` are its coefficients and `epsilon` the weighted RMS
/// residual.
pub fn lime<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    instance: &[f64],
    params: &LimeParams,
    seed: u64,
    class_index: Option<usize>,
) -> Result<AttributionVector, ExplainError> {
    let m = model.n_features();
    if params.n_perturb < m + 1 {
        return Err(ExplainError::InvalidParameter {
            name: "n_perturb",
            reason: format!("need at least {} samples for {m} features", m + 1),
        });
    }
    let width = params.kernel_width.unwrap_or(0.75 * (m as f64).sqrt());
    if !(width > 0.0) {
        return Err(ExplainError::InvalidParameter { name: "kernel_width", reason: "must be positive".into() });
    }
    if !(params.ridge >= 0.0) {
        return Err(ExplainError::InvalidParameter { name: "ridge", reason: "must be non-negative".into() });
    }
    let x = aligned_row(model, ds, instance)?;
    let ds = aligned(model, ds)?;
    let background = ds.means();
    let class = match class_index {
        Some(c) => {
            check_class(model, c)?;
            c
        }
        None => argmax(&model.predict_proba(&x)?),
    };

    let mut rng = substream(seed, 0);
    let mut samples = Vec::with_capacity(params.n_perturb);
    let mut targets = Vec::with_capacity(params.n_perturb);
    for s in 0..params.n_perturb {
        let mask: Vec<bool> = if s == 0 { vec![true; m] } else { (0..m).map(|_| rng.random_bool(0.5)).collect() };
        let sample = PerturbationSample::new(mask, &x, &background, width);
        targets.push(model.predict_proba(&sample.mapped_row)?[class]);
        samples.push(sample);
    }

    // Normal equations over [1, z_1..z_m].
    let p = m + 1;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let design = |s: &PerturbationSample| -> Vec<f64> {
        std::iter::once(1.0).chain(s.mask.iter().map(|&b| if b { 1.0 } else { 0.0 })).collect()
    };
    for (s, &y) in samples.iter().zip(&targets) {
        let v = design(s);
        for a in 0..p {
            rhs[a] += s.kernel_weight * v[a] * y;
            for b in 0..p {
                gram[a][b] += s.kernel_weight * v[a] * v[b];
            }
        }
    }

    let mut ridge = params.ridge;
    let mut warnings = Vec::new();
    let mut solution = None;
    for attempt in 0..=MAX_RIDGE_DOUBLINGS {
        let mut a = gram.clone();
        for (k, row) in a.iter_mut().enumerate().skip(1) {
            row[k] += ridge;
        }
        if let Some(beta) = cholesky_solve(&a, &rhs) {
            solution = Some(beta);
            break;
        }
        if attempt == MAX_RIDGE_DOUBLINGS {
            return Err(ExplainError::Singular { ridge });
        }
        ridge = if ridge > 0.0 { ridge * 2.0 } else { 1e-12 };
        warnings.push(format!("singular normal equations; ridge raised to {ridge:e}"));
    }
    let beta = solution.expect("loop either solves or returns");

    let (mut sse, mut wsum) = (0.0, 0.0);
    for (s, &y) in samples.iter().zip(&targets) {
        let fit: f64 = design(s).iter().zip(&beta).map(|(a, b)| a * b).sum();
        sse += s.kernel_weight * (y - fit).powi(2);
        wsum += s.kernel_weight;
    }
    let mut av = AttributionVector::new("lime", model.feature_names().to_vec(), beta[1..].to_vec())
        .with_seed(seed)
        .with_epsilon((sse / wsum).sqrt());
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

    fn centered(d: usize) -> Dataset {
        Dataset::new(names(d), vec![vec![1.0; d], vec![-1.0; d]], vec![0, 1], vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn recovers_linear_effects() {
        let model = FnPredictor::binary(names(3), |x| 0.5 + 0.2 * x[0] - 0.1 * x[2]);
        let av = lime(&model, &centered(3), &[1.0, 1.0, 1.0], &LimeParams::default(), 4, Some(1)).unwrap();
        assert!((av.phi[0] - 0.2).abs() < 1e-3);
        assert!(av.phi[1].abs() < 1e-3);
        assert!((av.phi[2] + 0.1).abs() < 1e-3);
        assert!(av.residual_epsilon.unwrap() < 1e-3);
    }

    #[test]
    fn same_seed_same_result() {
        let model = FnPredictor::binary(names(4), |x| 1.0 / (1.0 + (-(x[0] * x[1] + x[2])).exp()));
        let ds = centered(4);
        let inst = [0.3, -0.8, 1.2, 0.0];
        let a = lime(&model, &ds, &inst, &LimeParams::default(), 17, None).unwrap();
        let b = lime(&model, &ds, &inst, &LimeParams::default(), 17, None).unwrap();
        assert_eq!(a, b);
        let c = lime(&model, &ds, &inst, &LimeParams::default(), 18, None).unwrap();
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn rejects_too_few_samples() {
        let model = FnPredictor::binary(names(3), |_| 0.5);
        let params = LimeParams { n_perturb: 3, ..LimeParams::default() };
        assert!(matches!(lime(&model, &centered(3), &[0.0; 3], &params, 0, None), Err(ExplainError::InvalidParameter { .. })));
    }

    #[test]
    fn degenerate_design_raises_ridge_instead_of_failing() {
        // Only the all-ones sample and one other draw: rank-deficient design.
        let model = FnPredictor::binary(names(3), |x| 0.5 + 0.1 * x[0]);
        let params = LimeParams { n_perturb: 4, kernel_width: None, ridge: 0.0 };
        let av = lime(&model, &centered(3), &[1.0; 3], &params, 2, Some(1)).unwrap();
        assert!(av.phi.iter().all(|v| v.is_finite()));
    }
}
