//! Ensemble interpretation for tabular classifiers.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`data`] loads a named-feature CSV into a [`Dataset`] and provides
//!    deterministic stratified splits, summary statistics and the Pearson
//!    correlation baseline.
//! 2. [`model_zoo`] trains the black-box classifiers to be explained
//!    (CART tree, random forest, logistic regression, Gaussian naive Bayes,
//!    gradient-boosted trees) behind the [`Predictor`] trait.
//! 3. [`explainers`] turns a predictor plus data into an [`AttributionVector`]
//!    of per-feature effects (LIME, Shapley sampling, exact Shapley, PFI, PDP,
//!    ALE, additive surrogate, global surrogate tree, interaction statistic).
//! 4. [`listspace`] maps attribution vectors to [`InterpretationList`]s and
//!    combines lists with positional (Borda) scoring.
//! 5. [`evaluation`] scores lists against a [`ReferenceLabel`] with the
//!    position-exact L-score and provides Kendall-tau diagnostics.
//! 6. [`selection`] applies ensemble lists to feature selection and compares
//!    them with correlation-based selection by retraining the model zoo.
//!
//! All randomness is drawn from [`rng::substream`], so every stochastic
//! result is a pure function of its inputs and seed.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod explainers;
pub mod fixtures;
pub mod listspace;
mod linalg;
pub mod model_zoo;
pub mod rng;
pub mod selection;

pub use data::{Dataset, FeatureStats};
pub use error::{Error, Result};
pub use evaluation::ReferenceLabel;
pub use explainers::AttributionVector;
pub use listspace::{InterpretationList, ListMode, ScoreBoard, TieRule};
pub use model_zoo::{Model, ModelKind, ModelSpec, Predictor};
pub use selection::SelectionReport;
