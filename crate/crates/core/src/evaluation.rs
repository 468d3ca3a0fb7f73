//! Supervised evaluation of interpretation lists against an expert label.
//!
//! The L-score is the fraction of rank positions at which a list names the
//! same feature as the reference label. No partial credit is given for near
//! misses; the Kendall-tau distance (number of discordant pairs) is offered
//! as a supplementary diagnostic.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::listspace::{check_permutation, csv_field, read_list_file, InterpretationList, ListError, RepairPolicy};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("lists order different feature sets: {0}")]
    UniverseMismatch(String),
    #[error("stability needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("label file must contain exactly one list, found {0}")]
    LabelCount(usize),
    #[error(transparent)]
    List(#[from] ListError),
}

/// Expert-provided reference order of the features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceLabel {
    pub ordered_features: Vec<String>,
    /// Free-text note on where the label came from.
    pub source: String,
}

impl ReferenceLabel {
    pub fn new(ordered_features: Vec<String>, source: &str) -> Result<Self, EvalError> {
        check_permutation(&ordered_features, &ordered_features)?;
        Ok(Self { ordered_features, source: source.to_string() })
    }

    /// Reads a label from list-file text holding exactly one list.
    pub fn parse(text: &str, source: &str) -> Result<Self, EvalError> {
        let file = read_list_file(text, RepairPolicy::Strict)?;
        if file.lists.len() != 1 {
            return Err(EvalError::LabelCount(file.lists.len()));
        }
        Self::new(file.lists[0].ordered_features.clone(), source)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ListError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.ordered_features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_features.is_empty()
    }

    /// The label viewed as a list with provenance `"label"`.
    pub fn as_list(&self) -> InterpretationList {
        InterpretationList { ordered_features: self.ordered_features.clone(), provenance: "label".into(), source_count: 1 }
    }
}

fn same_universe(a: &[String], b: &[String]) -> Result<(), EvalError> {
    check_permutation(a, b).map_err(|e| EvalError::UniverseMismatch(e.to_string()))
}

/// Number of positions at which `list` and `label` agree.
pub fn l_score_count(list: &InterpretationList, label: &ReferenceLabel) -> Result<usize, EvalError> {
    same_universe(&list.ordered_features, &label.ordered_features)?;
    Ok(list.ordered_features.iter().zip(&label.ordered_features).filter(|(a, b)| a == b).count())
}

/// Fraction of positions at which `list` and `label` agree.
pub fn l_score(list: &InterpretationList, label: &ReferenceLabel) -> Result<f64, EvalError> {
    Ok(l_score_count(list, label)? as f64 / label.len() as f64)
}

/// Number of feature pairs ordered differently by `a` and `b`.
pub fn kendall_tau_distance(a: &InterpretationList, b: &InterpretationList) -> Result<usize, EvalError> {
    same_universe(&a.ordered_features, &b.ordered_features)?;
    let pos: HashMap<&str, usize> = b.ordered_features.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let mapped: Vec<usize> = a.ordered_features.iter().map(|f| pos[f.as_str()]).collect();
    let mut discordant = 0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            if mapped[i] > mapped[j] {
                discordant += 1;
            }
        }
    }
    Ok(discordant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub name: String,
    pub matches: usize,
    pub n: usize,
    pub l_score: f64,
}

/// L-scores of named lists against one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn get(&self, name: &str) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("list,matches,n,l_score\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.4}\n", csv_field(&r.name), r.matches, r.n, r.l_score));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| list | matches | L_score |\n|---|---:|---:|\n");
        for r in &self.rows {
            out.push_str(&format!("| {} | {}/{} | {:.4} |\n", r.name, r.matches, r.n, r.l_score));
        }
        out
    }
}

/// Scores each list in order; lists are named by their provenance.
pub fn score_table(lists: &[InterpretationList], label: &ReferenceLabel) -> Result<ScoreTable, EvalError> {
    let rows = lists
        .iter()
        .map(|l| {
            let matches = l_score_count(l, label)?;
            Ok(ScoreRow { name: l.provenance.clone(), matches, n: label.len(), l_score: matches as f64 / label.len() as f64 })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(ScoreTable { rows })
}

/// Base lists and their ensemble from one run.
#[derive(Debug, Clone)]
pub struct StabilityRun {
    pub base: Vec<InterpretationList>,
    pub ensemble: InterpretationList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub runs: usize,
    /// Mean pairwise Kendall distance among all base lists of all runs.
    pub base_dispersion: f64,
    /// Mean pairwise Kendall distance among the per-run ensembles.
    pub ensemble_dispersion: f64,
    pub base_mean_l_score: Option<f64>,
    pub ensemble_mean_l_score: Option<f64>,
}

impl StabilityReport {
    /// True when ensembles vary no more than single explainer lists.
    pub fn ensemble_is_stabler(&self) -> bool {
        self.ensemble_dispersion <= self.base_dispersion
    }
}

fn mean_pairwise(lists: &[&InterpretationList]) -> Result<f64, EvalError> {
    let (mut sum, mut pairs) = (0usize, 0usize);
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            sum += kendall_tau_distance(lists[i], lists[j])?;
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 0.0 } else { sum as f64 / pairs as f64 })
}

/// Compares how much single explainer lists and ensembles vary across
/// repeated runs, optionally with their mean L-score against `label`.
pub fn stability_report(runs: &[StabilityRun], label: Option<&ReferenceLabel>) -> Result<StabilityReport, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::TooFewRuns(runs.len()));
    }
    let base: Vec<&InterpretationList> = runs.iter().flat_map(|r| &r.base).collect();
    let ensembles: Vec<&InterpretationList> = runs.iter().map(|r| &r.ensemble).collect();
    let mean_score = |lists: &[&InterpretationList], label: &ReferenceLabel| -> Result<f64, EvalError> {
        let total = lists.iter().map(|l| l_score(l, label)).sum::<Result<f64, _>>()?;
        Ok(total / lists.len() as f64)
    };
    Ok(StabilityReport {
        runs: runs.len(),
        base_dispersion: mean_pairwise(&base)?,
        ensemble_dispersion: mean_pairwise(&ensembles)?,
        base_mean_l_score: label.map(|l| mean_score(&base, l)).transpose()?,
        ensemble_mean_l_score: label.map(|l| mean_score(&ensembles, l)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn list(s: &str) -> InterpretationList {
        InterpretationList { ordered_features: s.chars().map(String::from).collect(), provenance: s.into(), source_count: 1 }
    }

    fn label(s: &str) -> ReferenceLabel {
        ReferenceLabel::new(s.chars().map(String::from).collect(), "test").unwrap()
    }

    #[test]
    fn l_score_examples() {
        assert_eq!(l_score(&list("abc"), &label("abc")).unwrap(), 1.0);
        assert_eq!(l_score_count(&list("abc"), &label("cba")).unwrap(), 1);
        assert!(matches!(l_score(&list("abd"), &label("abc")), Err(EvalError::UniverseMismatch(_))));
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau_distance(&list("abcd"), &list("abcd")).unwrap(), 0);
        assert_eq!(kendall_tau_distance(&list("abcd"), &list("abdc")).unwrap(), 1);
        assert_eq!(kendall_tau_distance(&list("abcd"), &list("dcba")).unwrap(), 6);
    }

    #[test]
    fn tables() {
        let t = score_table(&[list("abc"), list("cba")], &label("abc")).unwrap();
        assert_eq!(t.to_csv(), "list,matches,n,l_score\nabc,3,3,1.0000\ncba,1,3,0.3333\n");
        assert!(t.to_markdown().contains("| cba | 1/3 | 0.3333 |"));
        assert!(score_table(&[], &label("abc")).unwrap().rows.is_empty());
    }

    #[test]
    fn stability_examples() {
        let same = StabilityRun { base: vec![list("abc"), list("abc")], ensemble: list("abc") };
        let r = stability_report(&[same.clone(), same.clone()], Some(&label("abc"))).unwrap();
        assert_eq!((r.base_dispersion, r.ensemble_dispersion), (0.0, 0.0));
        assert_eq!(r.base_mean_l_score, Some(1.0));
        // Pooled lists abc, cba, abc, cba: pair distances 3,0,3,3,0,3.
        let split = StabilityRun { base: vec![list("abc"), list("cba")], ensemble: list("abc") };
        let r = stability_report(&[split.clone(), split], None).unwrap();
        assert_eq!(r.base_dispersion, 2.0);
        assert_eq!(r.ensemble_dispersion, 0.0);
        assert!(r.ensemble_is_stabler());
        assert!(matches!(stability_report(&[same], None), Err(EvalError::TooFewRuns(1))));
    }

    #[test]
    fn label_file() {
        let l = ReferenceLabel::parse("# x\nlabel: b > a\n", "t").unwrap();
        assert_eq!(l.ordered_features, ["b", "a"]);
        assert!(matches!(ReferenceLabel::parse("a > b\nb > a", "t"), Err(EvalError::LabelCount(2))));
    }

    fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..n).collect::<Vec<_>>()).prop_shuffle()
    }

    fn named(p: &[usize]) -> InterpretationList {
        InterpretationList { ordered_features: p.iter().map(|i| format!("f{i}")).collect(), provenance: "p".into(), source_count: 1 }
    }

    proptest! {
        #[test]
        fn l_score_properties((a, b) in (1usize..10).prop_flat_map(|n| (perm(n), perm(n)))) {
            let n = a.len();
            let la = named(&a);
            let lb = named(&b);
            let ab = l_score_count(&la, &ReferenceLabel::new(lb.ordered_features.clone(), "").unwrap()).unwrap();
            let ba = l_score_count(&lb, &ReferenceLabel::new(la.ordered_features.clone(), "").unwrap()).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= n);
            if n > 1 {
                prop_assert_ne!(ab, n - 1);
            }
        }

        #[test]
        fn kendall_is_a_metric((a, b, c) in (1usize..9).prop_flat_map(|n| (perm(n), perm(n), perm(n)))) {
            let (la, lb, lc) = (named(&a), named(&b), named(&c));
            let d = |x: &InterpretationList, y: &InterpretationList| kendall_tau_distance(x, y).unwrap();
            prop_assert_eq!(d(&la, &lb), d(&lb, &la));
            prop_assert_eq!(d(&la, &lb) == 0, a == b);
            prop_assert!(d(&la, &lc) <= d(&la, &lb) + d(&lb, &lc));
        }
    }
}
