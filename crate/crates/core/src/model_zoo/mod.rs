//! The black-box classifiers that get explained.
//!
//! Five kinds are implemented in-crate: a CART decision tree, a random
//! forest, multinomial logistic regression, Gaussian naive Bayes and a
//! gradient-boosted tree ensemble (one engine standing in for both XGBoost
//! and LightGBM). All of them sit behind [`Predictor`], the contract the
//! explainers consume.
//!
//! Training first sorts the rows into a canonical order, so every estimator
//! is independent of the incoming row order and bitwise reproducible for a
//! fixed seed.

mod forest;
mod gbdt;
mod logistic;
mod naive_bayes;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
pub use forest::RandomForest;
pub use gbdt::GradientBoosting;
pub use logistic::LogisticRegression;
pub use naive_bayes::GaussianNb;
pub use tree::Tree;

pub const MODEL_FORMAT: &str = "ensemble-interp-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameter {name}: {reason}")]
    InvalidHyperparameter { name: String, reason: String },
    #[error("hyperparameter {name} does not apply to {kind}")]
    Inapplicable { name: String, kind: ModelKind },
    #[error("unknown model kind {0:?}")]
    UnknownKind(String),
    #[error("cannot parse model spec {0:?}")]
    BadSpec(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("expected {expected} features, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("non-finite input at feature {0}")]
    NonFinite(usize),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model file {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Anything that maps a feature row to class probabilities.
pub trait Predictor: Sync {
    fn feature_names(&self) -> &[String];

    fn n_classes(&self) -> usize;

    fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, ModelError>;

    fn n_features(&self) -> usize {
        self.feature_names().len()
    }

    /// Most probable class; ties go to the lowest class index.
    fn predict(&self, row: &[f64]) -> Result<usize, ModelError> {
        Ok(argmax(&self.predict_proba(row)?))
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_row(row: &[f64], expected: usize) -> Result<(), ModelError> {
    if row.len() != expected {
        return Err(ModelError::Arity { expected, found: row.len() });
    }
    match row.iter().position(|v| !v.is_finite()) {
        Some(j) => Err(ModelError::NonFinite(j)),
        None => Ok(()),
    }
}

type ProbaFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Wraps a closure as a [`Predictor`]; used for synthetic models with known
/// structure.
pub struct FnPredictor {
    feature_names: Vec<String>,
    n_classes: usize,
    f: Box<ProbaFn>,
}

impl FnPredictor {
    pub fn new<F>(feature_names: Vec<String>, n_classes: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { feature_names, n_classes, f: Box::new(f) }
    }

    /// Two-class model whose class-1 probability is `p(x)` (not clamped).
    pub fn binary<F>(feature_names: Vec<String>, p: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(feature_names, 2, move |x| {
            let v = p(x);
            vec![1.0 - v, v]
        })
    }
}

impl fmt::Debug for FnPredictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPredictor").field("feature_names", &self.feature_names).field("n_classes", &self.n_classes).finish()
    }
}

impl Predictor for FnPredictor {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
    fn n_classes(&self) -> usize {
        self.n_classes
    }
    fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_row(row, self.feature_names.len())?;
        Ok((self.f)(row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    Logistic,
    GaussianNb,
    Gbdt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Logistic, ModelKind::GaussianNb, ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::Gbdt];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Logistic => "logistic",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::Gbdt => "gbdt",
        }
    }

    fn accepts(self, param: &str) -> bool {
        use ModelKind::*;
        match param {
            "max_depth" => matches!(self, DecisionTree | RandomForest | Gbdt),
            "n_trees" | "max_features" => self == RandomForest,
            "learning_rate" => matches!(self, Logistic | Gbdt),
            "n_rounds" => self == Gbdt,
            "l2_penalty" => matches!(self, Logistic | Gbdt),
            "max_iterations" => self == Logistic,
            _ => false,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "decision_tree" | "dt" => ModelKind::DecisionTree,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "logistic" | "logis" => ModelKind::Logistic,
            "gaussian_nb" | "gnb" => ModelKind::GaussianNb,
            "gbdt" | "xgb" | "lgb" => ModelKind::Gbdt,
            other => return Err(ModelError::UnknownKind(other.to_string())),
        })
    }
}

/// Optional hyperparameters; unset values take the per-kind defaults in
/// [`ModelSpec::resolved`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_features: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl Hyperparameters {
    fn set(&mut self, name: &str, value: &str) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::InvalidHyperparameter { name: name.to_string(), reason: reason.to_string() };
        let int = || value.parse::<usize>().map_err(|_| bad("expected a non-negative integer"));
        let real = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        match name {
            "max_depth" => self.max_depth = Some(int()?),
            "n_trees" => self.n_trees = Some(int()?),
            "max_features" => self.max_features = Some(int()?),
            "learning_rate" => self.learning_rate = Some(real()?),
            "n_rounds" => self.n_rounds = Some(int()?),
            "l2_penalty" => self.l2_penalty = Some(real()?),
            "max_iterations" => self.max_iterations = Some(int()?),
            _ => return Err(bad("unknown hyperparameter")),
        }
        Ok(())
    }

    fn names_set(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.max_depth.is_some() {
            v.push("max_depth");
        }
        if self.n_trees.is_some() {
            v.push("n_trees");
        }
        if self.max_features.is_some() {
            v.push("max_features");
        }
        if self.learning_rate.is_some() {
            v.push("learning_rate");
        }
        if self.n_rounds.is_some() {
            v.push("n_rounds");
        }
        if self.l2_penalty.is_some() {
            v.push("l2_penalty");
        }
        if self.max_iterations.is_some() {
            v.push("max_iterations");
        }
        v
    }
}

/// Which classifier to train, with what settings and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, hyperparameters: Hyperparameters::default(), seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_param(mut self, name: &str, value: impl ToString) -> Result<Self, ModelError> {
        self.hyperparameters.set(name, &value.to_string())?;
        self.validate()?;
        Ok(self)
    }

    /// Parses `kind[:name=value,...]`, e.g. `random_forest:n_trees=100,max_depth=8`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let (kind, params) = match text.split_once(':') {
            Some((k, p)) => (k, p),
            None => (text, ""),
        };
        let mut spec = ModelSpec::new(kind.parse()?);
        for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = pair.split_once('=').ok_or_else(|| ModelError::BadSpec(text.to_string()))?;
            if name.trim() == "seed" {
                spec.seed = value.trim().parse().map_err(|_| ModelError::BadSpec(text.to_string()))?;
            } else {
                spec.hyperparameters.set(name.trim(), value.trim())?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let h = &self.hyperparameters;
        for name in h.names_set() {
            if !self.kind.accepts(name) {
                return Err(ModelError::Inapplicable { name: name.to_string(), kind: self.kind });
            }
        }
        let bad = |name: &str, reason: &str| {
            Err(ModelError::InvalidHyperparameter { name: name.to_string(), reason: reason.to_string() })
        };
        if h.max_depth == Some(0) {
            return bad("max_depth", "must be at least 1");
        }
        if h.n_trees == Some(0) {
            return bad("n_trees", "must be at least 1");
        }
        if h.max_features == Some(0) {
            return bad("max_features", "must be at least 1");
        }
        if h.n_rounds == Some(0) {
            return bad("n_rounds", "must be at least 1");
        }
        if h.max_iterations == Some(0) {
            return bad("max_iterations", "must be at least 1");
        }
        if let Some(lr) = h.learning_rate {
            if !(lr > 0.0 && lr <= 1.0) {
                return bad("learning_rate", "must lie in (0, 1]");
            }
        }
        if let Some(l2) = h.l2_penalty {
            if !(l2 >= 0.0 && l2.is_finite()) {
                return bad("l2_penalty", "must be finite and >= 0");
            }
        }
        Ok(())
    }

    /// Hyperparameters with the per-kind defaults filled in.
    pub fn resolved(&self) -> Hyperparameters {
        let h = &self.hyperparameters;
        let mut r = Hyperparameters::default();
        match self.kind {
            ModelKind::DecisionTree => r.max_depth = h.max_depth,
            ModelKind::RandomForest => {
                r.max_depth = h.max_depth;
                r.n_trees = Some(h.n_trees.unwrap_or(100));
                r.max_features = h.max_features;
            }
            ModelKind::Logistic => {
                r.learning_rate = Some(h.learning_rate.unwrap_or(0.5));
                r.l2_penalty = Some(h.l2_penalty.unwrap_or(1e-4));
                r.max_iterations = Some(h.max_iterations.unwrap_or(1000));
            }
            ModelKind::GaussianNb => {}
            ModelKind::Gbdt => {
                r.max_depth = Some(h.max_depth.unwrap_or(3));
                r.learning_rate = Some(h.learning_rate.unwrap_or(0.1));
                r.n_rounds = Some(h.n_rounds.unwrap_or(100));
                r.l2_penalty = Some(h.l2_penalty.unwrap_or(1.0));
            }
        }
        r
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.kind)?;
        let h = self.resolved();
        let mut parts = Vec::new();
        if let Some(v) = h.max_depth {
            parts.push(format!("max_depth={v}"));
        }
        if let Some(v) = h.n_trees {
            parts.push(format!("n_trees={v}"));
        }
        if let Some(v) = h.max_features {
            parts.push(format!("max_features={v}"));
        }
        if let Some(v) = h.learning_rate {
            parts.push(format!("learning_rate={v}"));
        }
        if let Some(v) = h.n_rounds {
            parts.push(format!("n_rounds={v}"));
        }
        if let Some(v) = h.l2_penalty {
            parts.push(format!("l2_penalty={v}"));
        }
        if let Some(v) = h.max_iterations {
            parts.push(format!("max_iterations={v}"));
        }
        parts.push(format!("seed={}", self.seed));
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    DecisionTree(Tree),
    RandomForest(RandomForest),
    Logistic(LogisticRegression),
    GaussianNb(GaussianNb),
    Gbdt(GradientBoosting),
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    spec: ModelSpec,
    params: Params,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

/// Trains `spec` on `ds`. Fails on invalid hyperparameters or when fewer
/// than two classes are present.
pub fn train(ds: &Dataset, spec: &ModelSpec) -> Result<Model, ModelError> {
    spec.validate()?;
    if ds.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ModelError::SingleClass);
    }
    let canonical = canonical_order(ds);
    let x: Vec<Vec<f64>> = canonical.iter().map(|&i| ds.row(i).to_vec()).collect();
    let y: Vec<usize> = canonical.iter().map(|&i| ds.targets()[i]).collect();
    let k = ds.n_classes();
    let h = spec.resolved();
    let params = match spec.kind {
        ModelKind::DecisionTree => {
            let sample: Vec<usize> = (0..x.len()).collect();
            let gp = tree::GrowParams { max_depth: h.max_depth, min_samples_split: 2, max_features: None };
            Params::DecisionTree(tree::grow_classifier(&x, &y, k, &sample, gp, None))
        }
        ModelKind::RandomForest => Params::RandomForest(RandomForest::fit(&x, &y, k, &h, spec.seed)),
        ModelKind::Logistic => Params::Logistic(LogisticRegression::fit(&x, &y, k, &h)),
        ModelKind::GaussianNb => Params::GaussianNb(GaussianNb::fit(&x, &y, k)),
        ModelKind::Gbdt => Params::Gbdt(GradientBoosting::fit(&x, &y, k, &h)),
    };
    Ok(Model {
        spec: spec.clone(),
        params,
        feature_names: ds.feature_names().to_vec(),
        class_names: ds.class_names().to_vec(),
    })
}

/// Row order sorted by feature values, then target.
fn canonical_order(ds: &Dataset) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ds.n_samples()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (ds.row(a), ds.row(b));
        ra.iter()
            .zip(rb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ds.targets()[a].cmp(&ds.targets()[b]))
    });
    idx
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Probabilities for a row whose columns are named by `columns`, in any
    /// order. Extra columns are ignored; a missing one is a schema error.
    pub fn predict_proba_named(&self, columns: &[String], row: &[f64]) -> Result<Vec<f64>, ModelError> {
        if columns.len() != row.len() {
            return Err(ModelError::Arity { expected: columns.len(), found: row.len() });
        }
        let map = self.column_map(columns)?;
        let ordered: Vec<f64> = map.iter().map(|&j| row[j]).collect();
        self.predict_proba(&ordered)
    }

    /// For each training feature, its position within `columns`.
    pub fn column_map(&self, columns: &[String]) -> Result<Vec<usize>, ModelError> {
        self.feature_names
            .iter()
            .map(|f| columns.iter().position(|c| c == f).ok_or_else(|| ModelError::Schema(format!("missing feature {f:?}"))))
            .collect()
    }

    /// The versioned file form read by [`Model::from_json`].
    pub fn to_json(&self) -> String {
        let file = ModelFile { format: MODEL_FORMAT.into(), version: MODEL_FORMAT_VERSION, model: self.clone() };
        serde_json::to_string_pretty(&file).expect("models serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version { format: file.format, version: file.version });
        }
        Ok(file.model)
    }
}

impl Predictor for Model {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_row(row, self.feature_names.len())?;
        Ok(match &self.params {
            Params::DecisionTree(t) => t.leaf_value(row).to_vec(),
            Params::RandomForest(f) => f.predict_proba(row),
            Params::Logistic(m) => m.predict_proba(row),
            Params::GaussianNb(m) => m.predict_proba(row),
            Params::Gbdt(m) => m.predict_proba(row),
        })
    }
}

/// Resolves the columns of `ds` onto the predictor's feature order.
pub fn align_columns<P: Predictor + ?Sized>(model: &P, ds: &Dataset) -> Result<Vec<usize>, ModelError> {
    let names = model.feature_names();
    if names.len() != ds.n_features() {
        return Err(ModelError::Schema(format!("model expects {} features, data has {}", names.len(), ds.n_features())));
    }
    names
        .iter()
        .map(|f| ds.feature_index(f).ok_or_else(|| ModelError::Schema(format!("data lacks feature {f:?}"))))
        .collect()
}

/// Fraction of rows whose argmax prediction equals the target (ties to the
/// lowest class index). Columns are matched by name.
pub fn accuracy<P: Predictor + ?Sized>(model: &P, ds: &Dataset) -> Result<f64, ModelError> {
    let map = align_columns(model, ds)?;
    let identity = map.iter().enumerate().all(|(i, &j)| i == j);
    let mut correct = 0usize;
    let mut buf = vec![0.0; map.len()];
    for (row, &t) in ds.rows().iter().zip(ds.targets()) {
        let pred = if identity {
            model.predict(row)?
        } else {
            for (k, &j) in map.iter().enumerate() {
                buf[k] = row[j];
            }
            model.predict(&buf)?
        };
        if pred == t {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.n_samples() as f64)
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}
