//! Model-agnostic attribution methods.
//!
//! Every explainer reduces a model's behaviour to one real effect per feature
//! (an [`AttributionVector`]); [`crate::listspace`] then orders those effects
//! into an interpretation list. Local methods ([`lime`], [`shapley_sampling`],
//! [`exact_shapley`]) explain one instance and replace "absent" features by
//! the dataset means. The global methods reduce a curve or a fitted surrogate
//! to a scalar:
//!
//! | id    | effect per feature                                        |
//! |-------|-----------------------------------------------------------|
//! | `pfi` | accuracy drop under column permutation                    |
//! | `pdp` | std of the partial-dependence curve on an equispaced grid |
//! | `ale` | std of the centered first-order ALE curve over the data   |
//! | `gam` | variance of the backfitted additive component             |
//! | `gsm` | normalized Gini decrease in a surrogate tree              |
//! | `fi`  | Friedman's total interaction statistic H²                 |
//! | `shap`| mean absolute sampled Shapley value over instances        |
//!
//! For global methods `class_index = None` averages the per-class statistic
//! over all classes; for local methods it selects the predicted class of the
//! explained instance.

mod effects;
mod gam;
mod interaction;
mod lime;
mod permutation;
mod shapley;
mod surrogate;

use std::borrow::Cow;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::model_zoo::{ModelError, Predictor};

pub use effects::{ale_importance, pdp_importance};
pub use gam::gam_importance;
pub use interaction::interaction_importance;
pub use lime::{lime, LimeParams};
pub use permutation::pfi;
pub use shapley::{exact_shapley, shapley_global, shapley_sampling, MAX_EXACT_FEATURES};
pub use surrogate::surrogate_importance;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("class index {index} out of range for {n_classes} classes")]
    InvalidClass { index: usize, n_classes: usize },
    #[error("exact Shapley enumeration supports at most {max} features, got {n}")]
    TooManyFeatures { n: usize, max: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("surrogate normal equations stay singular up to ridge penalty {ridge:e}")]
    Singular { ridge: f64 },
    #[error("unknown explainer method {0:?}")]
    UnknownMethod(String),
    #[error("method {0} explains a single instance; none was given")]
    MissingInstance(&'static str),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed attribution file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("attribution is invalid: {0}")]
    Invalid(String),
}

/// Per-feature effects produced by one explainer run.
///
/// Serialized as `{method, seed, instance, features, phi, epsilon}`; the
/// optional `warnings` array is omitted when empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    #[serde(rename = "method")]
    pub method_id: String,
    pub seed: Option<u64>,
    #[serde(rename = "instance")]
    pub instance_index: Option<usize>,
    #[serde(rename = "features")]
    pub feature_names: Vec<String>,
    pub phi: Vec<f64>,
    /// Fit error of the surrogate, for methods that fit one.
    #[serde(rename = "epsilon")]
    pub residual_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AttributionVector {
    pub fn new(method_id: &str, feature_names: Vec<String>, phi: Vec<f64>) -> Self {
        Self {
            method_id: method_id.to_string(),
            seed: None,
            instance_index: None,
            feature_names,
            phi,
            residual_epsilon: None,
            warnings: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_instance(mut self, index: usize) -> Self {
        self.instance_index = Some(index);
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.residual_epsilon = Some(eps);
        self
    }

    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.phi.len() != self.feature_names.len() {
            return Err(ExplainError::Invalid(format!(
                "{} effects for {} features",
                self.phi.len(),
                self.feature_names.len()
            )));
        }
        if let Some(i) = self.phi.iter().position(|v| !v.is_finite()) {
            return Err(ExplainError::Invalid(format!("non-finite effect for {:?}", self.feature_names[i])));
        }
        if let Some(e) = self.residual_epsilon {
            if !(e >= 0.0) {
                return Err(ExplainError::Invalid(format!("negative residual {e}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("attribution vectors serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        let av: Self = serde_json::from_str(text)?;
        av.validate()?;
        Ok(av)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExplainError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ExplainError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExplainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExplainError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

/// One coalition sample of a local surrogate: `mapped_row` takes the
/// instance value where `mask` is set and the background value elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    pub mask: Vec<bool>,
    pub mapped_row: Vec<f64>,
    pub kernel_weight: f64,
}

impl PerturbationSample {
    /// Builds the sample with kernel weight `exp(-d² / w²)`, `d` being the
    /// number of switched-off features.
    pub fn new(mask: Vec<bool>, instance: &[f64], background: &[f64], kernel_width: f64) -> Self {
        let mapped_row = mask_row(&mask, instance, background);
        let d = mask.iter().filter(|&&m| !m).count() as f64;
        let kernel_weight = (-(d * d) / (kernel_width * kernel_width)).exp();
        Self { mask, mapped_row, kernel_weight }
    }
}

pub(crate) fn mask_row(mask: &[bool], instance: &[f64], background: &[f64]) -> Vec<f64> {
    mask.iter().zip(instance.iter().zip(background)).map(|(&m, (&x, &b))| if m { x } else { b }).collect()
}

/// Which explainer to run and with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ExplainerConfig {
    Lime {
        n_perturb: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel_width: Option<f64>,
        ridge: f64,
    },
    /// Sampled Shapley values; local when an instance is given, otherwise the
    /// mean absolute value over `n_instances` rows.
    Shap { n_samples: usize, n_instances: usize },
    ShapExact,
    Pfi { repeats: usize },
    Pdp { grid_points: usize },
    Ale { n_bins: usize },
    Gam { n_bins: usize },
    Gsm { depth: usize },
    Fi { grid_points: usize, sample_cap: usize },
}

impl ExplainerConfig {
    pub const METHODS: [&'static str; 9] = ["lime", "shap", "shap_exact", "pfi", "pdp", "ale", "gam", "gsm", "fi"];

    /// Default parameters for a method id.
    pub fn default_for(method: &str) -> Result<Self, ExplainError> {
        Ok(match method {
            "lime" => ExplainerConfig::Lime { n_perturb: 1000, kernel_width: None, ridge: lime::DEFAULT_RIDGE },
            "shap" => ExplainerConfig::Shap { n_samples: 200, n_instances: 30 },
            "shap_exact" => ExplainerConfig::ShapExact,
            "pfi" => ExplainerConfig::Pfi { repeats: 10 },
            "pdp" => ExplainerConfig::Pdp { grid_points: 20 },
            "ale" => ExplainerConfig::Ale { n_bins: 10 },
            "gam" => ExplainerConfig::Gam { n_bins: 10 },
            "gsm" => ExplainerConfig::Gsm { depth: 4 },
            "fi" => ExplainerConfig::Fi { grid_points: 30, sample_cap: 60 },
            other => return Err(ExplainError::UnknownMethod(other.to_string())),
        })
    }

    pub fn method_id(&self) -> &'static str {
        match self {
            ExplainerConfig::Lime { .. } => "lime",
            ExplainerConfig::Shap { .. } => "shap",
            ExplainerConfig::ShapExact => "shap_exact",
            ExplainerConfig::Pfi { .. } => "pfi",
            ExplainerConfig::Pdp { .. } => "pdp",
            ExplainerConfig::Ale { .. } => "ale",
            ExplainerConfig::Gam { .. } => "gam",
            ExplainerConfig::Gsm { .. } => "gsm",
            ExplainerConfig::Fi { .. } => "fi",
        }
    }

    /// Runs the explainer. `instance` is `(row index in ds, row)` for local
    /// methods and ignored by global ones (except `shap`, which is local when
    /// an instance is supplied).
    pub fn run<P: Predictor + ?Sized>(
        &self,
        model: &P,
        ds: &Dataset,
        instance: Option<usize>,
        seed: u64,
        class_index: Option<usize>,
    ) -> Result<AttributionVector, ExplainError> {
        let row = |name| instance.map(|i| ds.row(i).to_vec()).ok_or(ExplainError::MissingInstance(name));
        let av = match *self {
            ExplainerConfig::Lime { n_perturb, kernel_width, ridge } => {
                let params = LimeParams { n_perturb, kernel_width, ridge };
                lime(model, ds, &row("lime")?, &params, seed, class_index)?
            }
            ExplainerConfig::Shap { n_samples, n_instances } => match instance {
                Some(_) => shapley_sampling(model, ds, &row("shap")?, n_samples, seed, class_index)?,
                None => shapley_global(model, ds, n_instances, n_samples, seed)?,
            },
            ExplainerConfig::ShapExact => exact_shapley(model, ds, &row("shap_exact")?, class_index)?,
            ExplainerConfig::Pfi { repeats } => pfi(model, ds, repeats, seed)?,
            ExplainerConfig::Pdp { grid_points } => pdp_importance(model, ds, grid_points, class_index)?,
            ExplainerConfig::Ale { n_bins } => ale_importance(model, ds, n_bins, class_index)?,
            ExplainerConfig::Gam { n_bins } => gam_importance(model, ds, n_bins, class_index)?,
            ExplainerConfig::Gsm { depth } => surrogate_importance(model, ds, depth)?,
            ExplainerConfig::Fi { grid_points, sample_cap } => {
                interaction_importance(model, ds, grid_points, sample_cap, class_index)?
            }
        };
        let local = matches!(self, ExplainerConfig::Lime { .. } | ExplainerConfig::ShapExact | ExplainerConfig::Shap { .. });
        Ok(match instance {
            Some(i) if local => av.with_instance(i),
            _ => av,
        })
    }
}

/// The dataset with its columns in the predictor's feature order.
pub(crate) fn aligned<'a, P: Predictor + ?Sized>(model: &P, ds: &'a Dataset) -> Result<Cow<'a, Dataset>, ExplainError> {
    if model.feature_names() == ds.feature_names() {
        return Ok(Cow::Borrowed(ds));
    }
    let map = crate::model_zoo::align_columns(model, ds)?;
    debug_assert_eq!(map.len(), ds.n_features());
    Ok(Cow::Owned(ds.project(model.feature_names())?))
}

/// Reorders an instance given in `ds` column order into model order.
pub(crate) fn aligned_row<P: Predictor + ?Sized>(model: &P, ds: &Dataset, row: &[f64]) -> Result<Vec<f64>, ExplainError> {
    if row.len() != ds.n_features() {
        return Err(ModelError::Arity { expected: ds.n_features(), found: row.len() }.into());
    }
    if let Some(j) = row.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite(j).into());
    }
    let map = crate::model_zoo::align_columns(model, ds)?;
    Ok(map.iter().map(|&j| row[j]).collect())
}

pub(crate) fn check_class<P: Predictor + ?Sized>(model: &P, class: usize) -> Result<(), ExplainError> {
    if class >= model.n_classes() {
        return Err(ExplainError::InvalidClass { index: class, n_classes: model.n_classes() });
    }
    Ok(())
}

/// Classes a global statistic is averaged over.
pub(crate) fn classes_for<P: Predictor + ?Sized>(model: &P, class_index: Option<usize>) -> Result<Vec<usize>, ExplainError> {
    match class_index {
        Some(c) => {
            check_class(model, c)?;
            Ok(vec![c])
        }
        None => Ok((0..model.n_classes()).collect()),
    }
}

/// Population standard deviation; exactly zero for a constant sequence.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    population_variance(values).sqrt()
}

pub(crate) fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

/// Quantile bin edges of a column: the sorted values at ranks
/// `round(k (n-1) / n_bins)`, duplicates removed.
pub(crate) fn quantile_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|k| sorted[((k as f64) * (n - 1) as f64 / n_bins as f64).round() as usize])
        .collect();
    edges.dedup();
    edges
}

/// Bin index `k >= 1` with `edges[k-1] < x <= edges[k]` (the lowest edge
/// belongs to bin 1). Requires at least two edges.
pub(crate) fn bin_of(edges: &[f64], x: f64) -> usize {
    let k = edges.partition_point(|&e| e < x);
    k.clamp(1, edges.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_sample_maps_and_weights() {
        let s = PerturbationSample::new(vec![true, false, true], &[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0], 2.0);
        assert_eq!(s.mapped_row, vec![1.0, 0.0, 3.0]);
        assert!((s.kernel_weight - (-0.25f64).exp()).abs() < 1e-15);
        let full = PerturbationSample::new(vec![true; 3], &[1.0, 2.0, 3.0], &[0.0; 3], 1.0);
        assert_eq!(full.kernel_weight, 1.0);
    }

    #[test]
    fn attribution_json_shape() {
        let av = AttributionVector::new("lime", vec!["a".into(), "b".into()], vec![0.5, -0.25]).with_seed(7).with_instance(3).with_epsilon(0.01);
        let v: serde_json::Value = serde_json::from_str(&av.to_json()).unwrap();
        for key in ["method", "seed", "instance", "features", "phi", "epsilon"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v.get("warnings").is_none());
        assert_eq!(AttributionVector::from_json(&av.to_json()).unwrap(), av);
    }

    #[test]
    fn rejects_malformed_attribution() {
        let bad = r#"{"method":"x","seed":null,"instance":null,"features":["a"],"phi":[1.0,2.0],"epsilon":null}"#;
        assert!(matches!(AttributionVector::from_json(bad), Err(ExplainError::Invalid(_))));
    }

    #[test]
    fn edges_and_bins() {
        let v: Vec<f64> = (0..11).map(f64::from).collect();
        let e = quantile_edges(&v, 5);
        assert_eq!(e, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(bin_of(&e, 0.0), 1);
        assert_eq!(bin_of(&e, 2.0), 1);
        assert_eq!(bin_of(&e, 2.5), 2);
        assert_eq!(bin_of(&e, 10.0), 5);
        assert_eq!(quantile_edges(&[3.0; 4], 4), vec![3.0]);
    }

    #[test]
    fn constant_std_is_exactly_zero() {
        assert_eq!(population_std(&[0.1; 7]), 0.0);
        assert!((population_std(&[0.0, 2.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_configs_cover_all_methods() {
        for m in ExplainerConfig::METHODS {
            assert_eq!(ExplainerConfig::default_for(m).unwrap().method_id(), m);
        }
        assert!(ExplainerConfig::default_for("deeplift").is_err());
    }
}
