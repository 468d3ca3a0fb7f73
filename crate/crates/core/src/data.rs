//! Tabular datasets: CSV ingestion, stratified splits, summary statistics and
//! the correlation baseline used for feature selection.
//!
//! Standard deviations use the population convention (divide by `n`)
//! throughout the crate.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::substream;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing header row")]
    MissingHeader,
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),
    #[error("target column {0:?} not found in header")]
    MissingTarget(String),
    #[error("no feature columns besides the target")]
    NoFeatures,
    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("non-finite value at row {row}, column {column:?}")]
    NonFinite { row: usize, column: String },
    #[error("row {row} has {found} fields, expected {expected}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset needs at least 2 samples, found {0}")]
    TooFewSamples(usize),
    #[error("target {target} at row {row} is not a valid class index (have {n_classes} classes)")]
    BadTarget { row: usize, target: usize, n_classes: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("split of {n} samples with fraction {fraction} leaves one side empty")]
    EmptySplit { n: usize, fraction: f64 },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("feature subset is empty")]
    EmptySubset,
}

/// Named-feature matrix with integer class targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    targets: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking every invariant: unique non-empty names,
    /// rectangular finite rows, valid targets and at least two samples.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        Self::build(feature_names, rows, targets, class_names, 2)
    }

    /// Subsets derived from a valid dataset (split parts, projections) only
    /// need one sample.
    fn build(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<usize>,
        class_names: Vec<String>,
        min_samples: usize,
    ) -> Result<Self, DataError> {
        check_names(&feature_names)?;
        if feature_names.is_empty() {
            return Err(DataError::NoFeatures);
        }
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        if rows.len() < min_samples {
            return Err(DataError::TooFewSamples(rows.len()));
        }
        if targets.len() != rows.len() {
            return Err(DataError::RowLength { row: targets.len(), expected: rows.len(), found: targets.len() });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(DataError::RowLength { row: i, expected: feature_names.len(), found: row.len() });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: i, column: feature_names[j].clone() });
            }
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= class_names.len() {
                return Err(DataError::BadTarget { row: i, target: t, n_classes: class_names.len() });
            }
        }
        Ok(Self { feature_names, rows, targets, class_names })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Per-class sample counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &t in &self.targets {
            counts[t] += 1;
        }
        counts
    }

    /// Rows at `indices` (in the given order), keeping names and classes.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        Self::build(
            self.feature_names.clone(),
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
            indices.iter().map(|&i| self.targets[i]).collect(),
            self.class_names.clone(),
            1,
        )
    }

    /// Keeps only the named columns, in the order given.
    pub fn project(&self, features: &[String]) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::EmptySubset);
        }
        let idx = features
            .iter()
            .map(|f| self.feature_index(f).ok_or_else(|| DataError::UnknownFeature(f.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::build(
            features.to_vec(),
            self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
            self.targets.clone(),
            self.class_names.clone(),
            1,
        )
    }

    /// Same samples with new targets (e.g. a model's predicted labels).
    pub fn with_targets(&self, targets: Vec<usize>, class_names: Vec<String>) -> Result<Self, DataError> {
        Self::build(self.feature_names.clone(), self.rows.clone(), targets, class_names, 1)
    }

    /// Column-wise means, the background point for coalition games.
    pub fn means(&self) -> Vec<f64> {
        feature_stats(self).mean
    }

    /// Writes the dataset back as CSV with the target as the last column.
    pub fn write_csv<W: Write>(&self, writer: W, target_column: &str) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(target_column);
        w.write_record(&header)?;
        for (row, &t) in self.rows.iter().zip(&self.targets) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.class_names[t].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
        Ok(())
    }
}

fn check_names(names: &[String]) -> Result<(), DataError> {
    let mut seen = HashSet::new();
    for (i, n) in names.iter().enumerate() {
        if n.trim().is_empty() {
            return Err(DataError::EmptyColumnName(i));
        }
        if !seen.insert(n.as_str()) {
            return Err(DataError::DuplicateColumn(n.clone()));
        }
    }
    Ok(())
}

/// Loads a headed, comma-separated file. Every non-target column must be
/// numeric; target cells are arbitrary labels, numbered by first appearance.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    read_csv(file, target_column)
}

pub fn read_csv<R: Read>(reader: R, target_column: &str) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(DataError::MissingHeader),
    };
    let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(DataError::MissingHeader);
    }
    check_names(&header)?;
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| DataError::MissingTarget(target_column.to_string()))?;
    let feature_names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != target_idx).map(|(_, h)| h.clone()).collect();
    if feature_names.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        // Data rows are numbered from 1, the header being row 0.
        let row_no = r + 1;
        if rec.len() != header.len() {
            return Err(DataError::RowLength { row: row_no, expected: header.len(), found: rec.len() });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == target_idx {
                let next = class_names.len();
                let k = *class_index.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                targets.push(k);
            } else {
                let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                    row: row_no,
                    column: header[c].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonFinite { row: row_no, column: header[c].clone() });
                }
                row.push(v);
            }
        }
        rows.push(row);
    }
    Dataset::new(feature_names, rows, targets, class_names)
}

/// Deterministic train/test split.
///
/// The test side receives `ceil(test_fraction * n)` samples. When every
/// represented class has at least two members the split is stratified:
/// test quotas are apportioned across classes by largest remainder and each
/// class is shuffled on its own substream. Otherwise the split falls back to
/// a plain shuffle and logs a warning. Both parts keep the original row order.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let (train_idx, test_idx) = split_indices(ds, test_fraction, seed)?;
    Ok((ds.select_rows(&train_idx)?, ds.select_rows(&test_idx)?))
}

/// Index form of [`split`]: `(train, test)` row indices, each ascending.
pub fn split_indices(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadFraction(test_fraction));
    }
    let n = ds.n_samples();
    let n_test = (test_fraction * n as f64).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DataError::EmptySplit { n, fraction: test_fraction });
    }

    let counts = ds.class_counts();
    let stratify = counts.iter().all(|&c| c == 0 || c >= 2);
    let mut in_test = vec![false; n];
    if stratify {
        let quotas = apportion(&counts, n_test);
        for (class, &quota) in quotas.iter().enumerate() {
            let mut members: Vec<usize> = (0..n).filter(|&i| ds.targets[i] == class).collect();
            members.shuffle(&mut substream(seed, class as u64));
            for &i in &members[..quota] {
                in_test[i] = true;
            }
        }
    } else {
        log::warn!("a class has a single member; falling back to an unstratified split");
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut substream(seed, u64::MAX));
        for &i in &all[..n_test] {
            in_test[i] = true;
        }
    }
    let test: Vec<usize> = (0..n).filter(|&i| in_test[i]).collect();
    let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

/// Largest-remainder apportionment of `total` over `counts`, never giving a
/// class its whole membership when it could be avoided.
fn apportion(counts: &[usize], total: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let exact: Vec<f64> = counts.iter().map(|&c| total as f64 * c as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Largest fractional part first, lower class index on ties.
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total - quotas.iter().sum::<usize>();
    for &k in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quotas[k] < counts[k] {
            quotas[k] += 1;
            remaining -= 1;
        }
    }
    quotas
}

/// Per-feature summary statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn feature_stats(ds: &Dataset) -> FeatureStats {
    let d = ds.n_features();
    let mut stats = FeatureStats { mean: vec![0.0; d], std: vec![0.0; d], min: vec![0.0; d], max: vec![0.0; d] };
    for j in 0..d {
        let col = ds.column(j);
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        stats.min[j] = lo;
        stats.max[j] = hi;
        if lo == hi {
            stats.mean[j] = lo;
            continue;
        }
        let mean = (col.iter().sum::<f64>() / col.len() as f64).clamp(lo, hi);
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        stats.mean[j] = mean;
        stats.std[j] = var.sqrt();
    }
    stats
}

/// Pearson coefficient of each feature against the numeric class index.
/// Constant features (or a constant target) map to 0.
pub fn pearson_correlation(ds: &Dataset) -> Vec<f64> {
    let y: Vec<f64> = ds.targets().iter().map(|&t| t as f64).collect();
    (0..ds.n_features()).map(|j| pearson(&ds.column(j), &y)).collect()
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if x.is_empty() || constant(x) || constant(y) {
        return 0.0;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}
