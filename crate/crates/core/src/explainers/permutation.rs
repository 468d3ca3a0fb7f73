use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{aligned, AttributionVector, ExplainError};
use crate::data::Dataset;
use crate::model_zoo::{accuracy, Predictor};
use crate::rng::{key2, substream};

/// Permutation feature importance: baseline accuracy minus the mean accuracy
/// over `repeats` shuffles of each column. Shuffle `r` of feature `j` draws
/// from substream `(seed, (j, r))`.
pub fn pfi<P: Predictor + ?Sized>(model: &P, ds: &Dataset, repeats: usize, seed: u64) -> Result<AttributionVector, ExplainError> {
    if repeats == 0 {
        return Err(ExplainError::InvalidParameter { name: "repeats", reason: "must be at least 1".into() });
    }
    let ds = aligned(model, ds)?;
    let baseline = accuracy(model, &ds)?;
    let phi = (0..ds.n_features())
        .into_par_iter()
        .map(|j| {
            let column = ds.column(j);
            let mut drop_sum = 0.0;
            for r in 0..repeats {
                let mut shuffled = column.clone();
                shuffled.shuffle(&mut substream(seed, key2(j as u64, r as u64)));
                let rows: Vec<Vec<f64>> = ds
                    .rows()
                    .iter()
                    .zip(&shuffled)
                    .map(|(row, &v)| {
                        let mut row = row.clone();
                        row[j] = v;
                        row
                    })
                    .collect();
                let permuted = Dataset::new(ds.feature_names().to_vec(), rows, ds.targets().to_vec(), ds.class_names().to_vec())?;
                drop_sum += baseline - accuracy(model, &permuted)?;
            }
            Ok(drop_sum / repeats as f64)
        })
        .collect::<Result<Vec<f64>, ExplainError>>()?;
    Ok(AttributionVector::new("pfi", model.feature_names().to_vec(), phi).with_seed(seed))
}
