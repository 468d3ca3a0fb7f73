//! Feature selection from interpretation lists, compared against
//! correlation-based selection by retraining the model zoo.
//!
//! All subsets of one comparison share a single stratified split. The metric
//! is test accuracy on that split. The gradient-boosting kind stands in for
//! both XGBoost and LightGBM, so the comparison covers five model kinds.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{pearson_correlation, split_indices, DataError, Dataset};
use crate::listspace::{csv_field, InterpretationList};
use crate::model_zoo::{accuracy, train, ModelError, ModelKind, ModelSpec};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("cannot keep {n} of {available} features")]
    OutOfRange { n: usize, available: usize },
    #[error("subset {0:?} is empty")]
    EmptySubset(String),
    #[error("no subsets to compare")]
    NoSubsets,
    #[error("no model specs given")]
    NoSpecs,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The first `n` features of `list`.
pub fn top_n(list: &InterpretationList, n: usize) -> Result<Vec<String>, SelectionError> {
    if n == 0 || n > list.len() {
        return Err(SelectionError::OutOfRange { n, available: list.len() });
    }
    Ok(list.head(n).to_vec())
}

/// The `n` features with the largest absolute Pearson correlation with the
/// class index; ties go to the lower feature index.
pub fn correlation_select(ds: &Dataset, n: usize) -> Result<Vec<String>, SelectionError> {
    if n == 0 || n > ds.n_features() {
        return Err(SelectionError::OutOfRange { n, available: ds.n_features() });
    }
    let r = pearson_correlation(ds);
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (r[a].abs(), r[b].abs());
        if ka == kb { a.cmp(&b) } else { kb.total_cmp(&ka) }
    });
    Ok(order[..n].iter().map(|&i| ds.feature_names()[i].clone()).collect())
}

/// A named feature subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    /// Selection method, e.g. `"ensemble"` or `"correlation"`.
    pub method: String,
    pub features: Vec<String>,
}

impl FeatureSubset {
    pub fn new(method: &str, features: Vec<String>) -> Self {
        Self { method: method.to_string(), features }
    }
}

/// Ensemble top-n and correlation top-n subsets for each `n` in `sizes`
/// (`n` larger than the feature count means all features).
pub fn sweep_subsets(ensemble: &InterpretationList, ds: &Dataset, sizes: &[usize]) -> Result<Vec<FeatureSubset>, SelectionError> {
    let mut out = Vec::new();
    for &n in sizes {
        let n = n.min(ds.n_features());
        out.push(FeatureSubset::new("ensemble", top_n(ensemble, n)?));
        out.push(FeatureSubset::new("correlation", correlation_select(ds, n)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCell {
    pub model: ModelKind,
    pub method: String,
    pub n_kept: usize,
    pub features: Vec<String>,
    pub accuracy: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub model: ModelKind,
    pub accuracy: f64,
}

/// Test accuracies of every (model, subset) pair on one shared split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub split_seed: u64,
    pub test_fraction: f64,
    /// Accuracy with all features, per model.
    pub baseline: Vec<Baseline>,
    /// Ordered by model, then subset order.
    pub cells: Vec<SelectionCell>,
}

/// Head-to-head tally of two selection methods over matching cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl Dominance {
    pub fn cells(&self) -> usize {
        self.wins + self.ties + self.losses
    }

    /// More than half of the cells are wins or ties.
    pub fn majority(&self) -> bool {
        2 * (self.wins + self.ties) > self.cells()
    }
}

/// Trains every spec on every subset (plus all features) over one split.
pub fn retrain_compare(
    ds: &Dataset,
    subsets: &[FeatureSubset],
    specs: &[ModelSpec],
    seed: u64,
    test_fraction: f64,
) -> Result<SelectionReport, SelectionError> {
    if subsets.is_empty() {
        return Err(SelectionError::NoSubsets);
    }
    if specs.is_empty() {
        return Err(SelectionError::NoSpecs);
    }
    if let Some(s) = subsets.iter().find(|s| s.features.is_empty()) {
        return Err(SelectionError::EmptySubset(s.method.clone()));
    }
    let (train_idx, test_idx) = split_indices(ds, test_fraction, seed)?;
    let train_ds = ds.select_rows(&train_idx)?;
    let test_ds = ds.select_rows(&test_idx)?;

    let fit = |spec: &ModelSpec, features: &[String]| -> Result<f64, SelectionError> {
        let tr = train_ds.project(features)?;
        let te = test_ds.project(features)?;
        Ok(accuracy(&train(&tr, spec)?, &te)?)
    };

    let baseline = specs
        .par_iter()
        .map(|spec| Ok(Baseline { model: spec.kind, accuracy: fit(spec, ds.feature_names())? }))
        .collect::<Result<Vec<_>, SelectionError>>()?;
    let jobs: Vec<(&ModelSpec, &FeatureSubset)> = specs.iter().flat_map(|s| subsets.iter().map(move |f| (s, f))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(spec, subset)| {
            Ok(SelectionCell {
                model: spec.kind,
                method: subset.method.clone(),
                n_kept: subset.features.len(),
                features: subset.features.clone(),
                accuracy: fit(spec, &subset.features)?,
                seed: spec.seed,
            })
        })
        .collect::<Result<Vec<_>, SelectionError>>()?;
    Ok(SelectionReport { split_seed: seed, test_fraction, baseline, cells })
}

impl SelectionReport {
    pub fn cell(&self, model: ModelKind, method: &str, n_kept: usize) -> Option<&SelectionCell> {
        self.cells.iter().find(|c| c.model == model && c.method == method && c.n_kept == n_kept)
    }

    /// Compares method `a` against method `b` on every (model, n) present
    /// for both.
    pub fn dominance(&self, a: &str, b: &str) -> Dominance {
        let mut d = Dominance { wins: 0, ties: 0, losses: 0 };
        for ca in self.cells.iter().filter(|c| c.method == a) {
            if let Some(cb) = self.cell(ca.model, b, ca.n_kept) {
                match ca.accuracy.partial_cmp(&cb.accuracy) {
                    Some(std::cmp::Ordering::Greater) => d.wins += 1,
                    Some(std::cmp::Ordering::Equal) => d.ties += 1,
                    _ => d.losses += 1,
                }
            }
        }
        d
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,method,n_kept,accuracy,seed,features\n");
        for b in &self.baseline {
            let _ = writeln!(out, "{},all,,{:.6},,", b.model, b.accuracy);
        }
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{:.6},{},{}", c.model, csv_field(&c.method), c.n_kept, c.accuracy, c.seed, csv_field(&c.features.join(";")));
        }
        out
    }

    fn methods(&self) -> Vec<&str> {
        let mut m: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !m.contains(&c.method.as_str()) {
                m.push(&c.method);
            }
        }
        m
    }

    fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.cells.iter().map(|c| c.n_kept).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn to_markdown(&self) -> String {
        let methods = self.methods();
        let mut out = format!(
            "Test accuracy on one stratified split (seed {}, test fraction {}). \
             The gbdt kind stands in for both XGBoost and LightGBM.\n\n| model | n |",
            self.split_seed, self.test_fraction
        );
        for m in &methods {
            let _ = write!(out, " {m} |");
        }
        out.push_str("\n|---|---:|");
        out.push_str(&"---:|".repeat(methods.len()));
        out.push('\n');
        for b in &self.baseline {
            for n in self.sizes() {
                let _ = write!(out, "| {} | {} |", b.model, n);
                for m in &methods {
                    match self.cell(b.model, m, n) {
                        Some(c) => write!(out, " {:.4} |", c.accuracy),
                        None => write!(out, " |"),
                    }
                    .expect("writing to a String");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "| {} | all (baseline) | {:.4} |{}", b.model, b.accuracy, " |".repeat(methods.len().saturating_sub(1)));
        }
        if methods.len() == 2 {
            let d = self.dominance(methods[0], methods[1]);
            let _ = write!(
                out,
                "\n{} vs {}: {} wins, {} ties, {} losses over {} cells.\n",
                methods[0],
                methods[1],
                d.wins,
                d.ties,
                d.losses,
                d.cells()
            );
        }
        out
    }

    /// Grouped bar chart: one group per (model, n), one bar per method.
    pub fn to_svg(&self) -> String {
        const COLORS: [&str; 4] = ["#3b6ea8", "#d08c2b", "#5a9e5a", "#a84b4b"];
        let methods = self.methods();
        let sizes = self.sizes();
        let groups: Vec<(ModelKind, usize)> = self.baseline.iter().flat_map(|b| sizes.iter().map(move |&n| (b.model, n))).collect();
        let bar = 12.0;
        let group_w = bar * methods.len() as f64 + 10.0;
        let (left, top, plot_h) = (50.0, 30.0, 200.0);
        let width = left + group_w * groups.len() as f64 + 20.0;
        let height = top + plot_h + 70.0;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"10\">\n"
        );
        let y = |acc: f64| top + plot_h * (1.0 - acc);
        for t in 0..=5 {
            let v = t as f64 / 5.0;
            let _ = writeln!(
                s,
                "<line x1=\"{left}\" y1=\"{0:.1}\" x2=\"{1:.1}\" y2=\"{0:.1}\" stroke=\"#ddd\"/><text x=\"{2}\" y=\"{3:.1}\" text-anchor=\"end\">{v:.1}</text>",
                y(v),
                width - 20.0,
                left - 4.0,
                y(v) + 3.0
            );
        }
        for (g, &(model, n)) in groups.iter().enumerate() {
            let x0 = left + 5.0 + g as f64 * group_w;
            for (k, m) in methods.iter().enumerate() {
                if let Some(c) = self.cell(model, m, n) {
                    let _ = writeln!(
                        s,
                        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar}\" height=\"{:.1}\" fill=\"{}\"><title>{model} {m} n={n}: {:.4}</title></rect>",
                        x0 + k as f64 * bar,
                        y(c.accuracy),
                        plot_h * c.accuracy,
                        COLORS[k % COLORS.len()],
                        c.accuracy
                    );
                }
            }
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" transform=\"rotate(-45 {0:.1} {1:.1})\">{model} n={n}</text>",
                x0 + group_w / 2.0,
                top + plot_h + 12.0
            );
        }
        for (k, m) in methods.iter().enumerate() {
            let x = left + 10.0 + k as f64 * 90.0;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"8\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"17\">{m}</text>",
                COLORS[k % COLORS.len()],
                x + 14.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::Predictor;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    fn synthetic() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let t = (i % 2) as f64;
                vec![t * 2.0 + ((i * 7) % 5) as f64 * 0.1, 3.0, ((i * 13) % 17) as f64, t + ((i * 3) % 4) as f64]
            })
            .collect();
        let targets = (0..80).map(|i| i % 2).collect();
        Dataset::new(names(4), rows, targets, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn top_n_bounds() {
        let l = InterpretationList { ordered_features: names(3), provenance: "e".into(), source_count: 1 };
        assert_eq!(top_n(&l, 2).unwrap(), ["x0", "x1"]);
        assert_eq!(top_n(&l, 3).unwrap(), names(3));
        assert!(top_n(&l, 0).is_err());
        assert!(top_n(&l, 4).is_err());
    }

    #[test]
    fn correlation_order() {
        let ds = synthetic();
        let picked = correlation_select(&ds, 4).unwrap();
        assert_eq!(picked[0], "x0");
        // The constant column comes after every informative one.
        assert_eq!(picked.last().unwrap(), "x1");
        let with_target = ds.project(&names(3)).unwrap();
        let rows: Vec<Vec<f64>> = with_target.rows().iter().zip(ds.targets()).map(|(r, &t)| [r.clone(), vec![t as f64]].concat()).collect();
        let mut nm = names(3);
        nm.push("y".into());
        let aug = Dataset::new(nm, rows, ds.targets().to_vec(), ds.class_names().to_vec()).unwrap();
        assert_eq!(correlation_select(&aug, 1).unwrap(), ["y"]);
    }

    #[test]
    fn all_features_reproduce_the_baseline() {
        let ds = synthetic();
        let specs = [ModelSpec::new(ModelKind::DecisionTree), ModelSpec::new(ModelKind::Logistic)];
        let subsets = [FeatureSubset::new("all", names(4)), FeatureSubset::new("one", vec!["x0".into()])];
        let report = retrain_compare(&ds, &subsets, &specs, 3, 0.3).unwrap();
        for b in &report.baseline {
            assert_eq!(report.cell(b.model, "all", 4).unwrap().accuracy, b.accuracy);
        }
        // The decisive single feature alone clears the majority rate.
        assert!(report.cell(ModelKind::DecisionTree, "one", 1).unwrap().accuracy >= 0.45);
        assert_eq!(retrain_compare(&ds, &subsets, &specs, 3, 0.3).unwrap(), report);
        assert!(report.to_svg().starts_with("<svg"));
        assert!(report.to_csv().lines().count() == 1 + 2 + 4);
    }

    #[test]
    fn excluded_columns_are_never_read() {
        let ds = synthetic();
        let kept: Vec<String> = vec!["x0".into(), "x3".into()];
        let model = train(&ds.project(&kept).unwrap(), &ModelSpec::new(ModelKind::RandomForest).with_seed(2)).unwrap();
        assert_eq!(model.feature_names(), kept.as_slice());
        for row in ds.rows() {
            let mut noisy = row.clone();
            noisy[1] = 1e9;
            noisy[2] = -7.5;
            let a = model.predict_proba_named(ds.feature_names(), row).unwrap();
            let b = model.predict_proba_named(ds.feature_names(), &noisy).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dominance_tally() {
        let cell = |method: &str, n, acc| SelectionCell { model: ModelKind::Logistic, method: method.into(), n_kept: n, features: vec![], accuracy: acc, seed: 0 };
        let report = SelectionReport {
            split_seed: 0,
            test_fraction: 0.3,
            baseline: vec![],
            cells: vec![cell("e", 1, 0.9), cell("c", 1, 0.8), cell("e", 2, 0.7), cell("c", 2, 0.7), cell("e", 3, 0.5), cell("c", 3, 0.6)],
        };
        let d = report.dominance("e", "c");
        assert_eq!((d.wins, d.ties, d.losses), (1, 1, 1));
        assert!(d.majority());
    }

    #[test]
    fn rejects_bad_input() {
        let ds = synthetic();
        let specs = [ModelSpec::new(ModelKind::Logistic)];
        assert!(matches!(retrain_compare(&ds, &[], &specs, 0, 0.3), Err(SelectionError::NoSubsets)));
        assert!(matches!(retrain_compare(&ds, &[FeatureSubset::new("e", vec![])], &specs, 0, 0.3), Err(SelectionError::EmptySubset(_))));
    }
}
