use super::{aligned, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::tree::{grow_classifier, GrowParams};
use crate::model_zoo::{argmax, Predictor};

/// Global surrogate importance: a CART tree of depth at most `depth` is fit
/// to the model's predicted labels, and each feature scores its share of the
/// total Gini decrease. `epsilon` is one minus the surrogate's fidelity.
pub fn surrogate_importance<P: Predictor + ?Sized>(model: &P, ds: &Dataset, depth: usize) -> Result<AttributionVector, ExplainError> {
    if depth == 0 {
        return Err(ExplainError::InvalidParameter { name: "depth", reason: "must be at least 1".into() });
    }
    let ds = aligned(model, ds)?;
    let labels = ds.rows().iter().map(|r| model.predict(r)).collect::<Result<Vec<_>, _>>()?;
    let sample: Vec<usize> = (0..ds.n_samples()).collect();
    let params = GrowParams { max_depth: Some(depth), min_samples_split: 2, max_features: None };
    let tree = grow_classifier(ds.rows(), &labels, model.n_classes(), &sample, params, None);

    let gains = tree.gain_by_feature(ds.n_features());
    let total: f64 = gains.iter().sum();
    let phi = if total > 0.0 { gains.iter().map(|g| g / total).collect() } else { vec![0.0; gains.len()] };
    let agree = ds.rows().iter().zip(&labels).filter(|(r, &l)| argmax(tree.leaf_value(r)) == l).count();
    let fidelity = agree as f64 / ds.n_samples() as f64;
    Ok(AttributionVector::new("gsm", model.feature_names().to_vec(), phi).with_epsilon(1.0 - fidelity))
}
