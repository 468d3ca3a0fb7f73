//! Interpretation lists and their positional (Borda) aggregation.
//!
//! An attribution vector becomes a list by sorting its effects in descending
//! order (by magnitude by default, or by raw value in signed mode) and naming
//! the features. Several lists over the same features combine by giving
//! `n - j + 1` points to the feature at rank `j` and sorting by total. Every
//! tie, at the effect level and at the total level, goes to the lower
//! feature index.
//!
//! Lists are stored in a plain-text format, one per line:
//!
//! ```text
//! # comment
//! @universe: A > B > C
//! LIME1: C > A > B
//! ```
//!
//! The optional `@universe` directive fixes the feature indices used for
//! tie-breaks; without it the first list's order is used. The `≻` symbol is
//! accepted as a synonym of `>`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explainers::AttributionVector;

#[derive(Debug, Error)]
pub enum ListError {
    #[error("no lists to aggregate")]
    Empty,
    #[error("list {list}: unknown feature {feature:?}")]
    UnknownFeature { list: usize, feature: String },
    #[error("list {list}: feature {feature:?} appears more than once")]
    DuplicateFeature { list: usize, feature: String },
    #[error("list {list}: feature {feature:?} is missing")]
    MissingFeature { list: usize, feature: String },
    #[error("list {list} cannot be repaired: {reason}")]
    Unrepairable { list: usize, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown {what} {value:?}")]
    UnknownOption { what: &'static str, value: String },
    #[error("attribution vector: {0}")]
    Attribution(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ListError {
    /// The same error attributed to list number `list`.
    fn at(self, list: usize) -> Self {
        match self {
            ListError::UnknownFeature { feature, .. } => ListError::UnknownFeature { list, feature },
            ListError::DuplicateFeature { feature, .. } => ListError::DuplicateFeature { list, feature },
            ListError::MissingFeature { feature, .. } => ListError::MissingFeature { list, feature },
            ListError::Unrepairable { reason, .. } => ListError::Unrepairable { list, reason },
            other => other,
        }
    }
}

/// Sort key used when turning effects into a list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListMode {
    /// Descending `|phi|`.
    #[default]
    Magnitude,
    /// Descending raw `phi`.
    Signed,
}

impl FromStr for ListMode {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "magnitude" => Ok(ListMode::Magnitude),
            "signed" => Ok(ListMode::Signed),
            other => Err(ListError::UnknownOption { what: "list mode", value: other.to_string() }),
        }
    }
}

impl fmt::Display for ListMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ListMode::Magnitude => "magnitude",
            ListMode::Signed => "signed",
        })
    }
}

/// Tie-breaking rule for equal keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Lower feature index first.
    #[default]
    FeatureIndex,
}

/// What to do with a list that is not a permutation of its universe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairPolicy {
    /// Reject it.
    #[default]
    Strict,
    /// One feature listed twice and one absent: the second occurrence is
    /// replaced by the absent feature.
    ReplaceSecondDuplicate,
}

impl FromStr for RepairPolicy {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" | "none" => Ok(RepairPolicy::Strict),
            "replace-second-duplicate" => Ok(RepairPolicy::ReplaceSecondDuplicate),
            other => Err(ListError::UnknownOption { what: "repair policy", value: other.to_string() }),
        }
    }
}

impl fmt::Display for RepairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairPolicy::Strict => "strict",
            RepairPolicy::ReplaceSecondDuplicate => "replace-second-duplicate",
        })
    }
}

/// A strict order over all features, most important first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretationList {
    pub ordered_features: Vec<String>,
    /// Method id of the explainer, or `"ensemble"`.
    pub provenance: String,
    /// Number of lists combined into this one.
    pub source_count: usize,
}

impl InterpretationList {
    /// Validated list over `universe`.
    pub fn new(ordered_features: Vec<String>, provenance: &str, universe: &[String]) -> Result<Self, ListError> {
        check_permutation(&ordered_features, universe)?;
        Ok(Self { ordered_features, provenance: provenance.to_string(), source_count: 1 })
    }

    pub fn len(&self) -> usize {
        self.ordered_features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_features.is_empty()
    }

    /// Zero-based rank of `feature`.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ordered_features.iter().position(|f| f == feature)
    }

    /// The first `n` features.
    pub fn head(&self, n: usize) -> &[String] {
        &self.ordered_features[..n.min(self.len())]
    }

    /// True when both lists order the same set of features.
    pub fn same_universe(&self, other: &Self) -> bool {
        check_permutation(&other.ordered_features, &self.ordered_features).is_ok()
    }
}

impl fmt::Display for InterpretationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_list(self))
    }
}

/// Checks that `features` is a permutation of `universe`. Unknown names are
/// reported first, then duplicates, then omissions.
pub fn check_permutation(features: &[String], universe: &[String]) -> Result<(), ListError> {
    let known: HashSet<&str> = universe.iter().map(String::as_str).collect();
    if let Some(f) = features.iter().find(|f| !known.contains(f.as_str())) {
        return Err(ListError::UnknownFeature { list: 0, feature: f.clone() });
    }
    let mut seen = HashSet::new();
    if let Some(f) = features.iter().find(|f| !seen.insert(f.as_str())) {
        return Err(ListError::DuplicateFeature { list: 0, feature: f.clone() });
    }
    if let Some(f) = universe.iter().find(|f| !seen.contains(f.as_str())) {
        return Err(ListError::MissingFeature { list: 0, feature: f.clone() });
    }
    Ok(())
}

/// Sorts the effects of `av` into a list; ties go to the lower index.
pub fn to_list(av: &AttributionVector, mode: ListMode, tie: TieRule) -> Result<InterpretationList, ListError> {
    let TieRule::FeatureIndex = tie;
    if av.phi.len() != av.feature_names.len() {
        return Err(ListError::Attribution(format!("{} effects for {} features", av.phi.len(), av.feature_names.len())));
    }
    if let Some(i) = av.phi.iter().position(|v| !v.is_finite()) {
        return Err(ListError::Attribution(format!("non-finite effect for {:?}", av.feature_names[i])));
    }
    let key = |v: f64| match mode {
        ListMode::Magnitude => v.abs(),
        ListMode::Signed => v,
    };
    let mut order: Vec<usize> = (0..av.phi.len()).collect();
    // -0.0 and 0.0 compare unequal under total_cmp; treat them as a tie.
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(av.phi[a]), key(av.phi[b]));
        if ka == kb { a.cmp(&b) } else { kb.total_cmp(&ka) }
    });
    let ordered_features: Vec<String> = order.iter().map(|&i| av.feature_names[i].clone()).collect();
    InterpretationList::new(ordered_features, &av.method_id, &av.feature_names)
}

/// Positional scores of a set of lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBoard {
    /// Points for rank `j` (zero-based): `n - j`.
    pub position_scores: Vec<u64>,
    /// Total points per feature, in universe order.
    pub totals: Vec<u64>,
    /// Number of contributing lists.
    pub m: usize,
    pub universe: Vec<String>,
}

impl ScoreBoard {
    pub fn total(&self, feature: &str) -> Option<u64> {
        self.universe.iter().position(|f| f == feature).map(|i| self.totals[i])
    }

    /// Feature indices by descending total, ties by index.
    fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.totals.len()).collect();
        order.sort_by(|&a, &b| self.totals[b].cmp(&self.totals[a]).then(a.cmp(&b)));
        order
    }

    /// `feature,total` rows in ranking order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,total\n");
        for (r, i) in self.ranking().into_iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", r + 1, csv_field(&self.universe[i]), self.totals[i]));
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Borda totals of `lists` over `universe`.
pub fn borda_scores(lists: &[InterpretationList], universe: &[String]) -> Result<ScoreBoard, ListError> {
    if lists.is_empty() {
        return Err(ListError::Empty);
    }
    let n = universe.len();
    let index: HashMap<&str, usize> = universe.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let position_scores: Vec<u64> = (0..n).map(|j| (n - j) as u64).collect();
    let mut totals = vec![0u64; n];
    for (li, list) in lists.iter().enumerate() {
        check_permutation(&list.ordered_features, universe).map_err(|e| e.at(li))?;
        for (j, f) in list.ordered_features.iter().enumerate() {
            totals[index[f.as_str()]] += position_scores[j];
        }
    }
    Ok(ScoreBoard { position_scores, totals, m: lists.len(), universe: universe.to_vec() })
}

/// Borda ensemble of `lists`: features by descending total.
pub fn aggregate(lists: &[InterpretationList], universe: &[String], tie: TieRule) -> Result<InterpretationList, ListError> {
    aggregate_with_scores(lists, universe, tie).map(|(list, _)| list)
}

/// [`aggregate`] that also returns the score board.
pub fn aggregate_with_scores(
    lists: &[InterpretationList],
    universe: &[String],
    tie: TieRule,
) -> Result<(InterpretationList, ScoreBoard), ListError> {
    let TieRule::FeatureIndex = tie;
    let board = borda_scores(lists, universe)?;
    let ordered_features = board.ranking().into_iter().map(|i| universe[i].clone()).collect();
    let list = InterpretationList { ordered_features, provenance: "ensemble".to_string(), source_count: lists.len() };
    Ok((list, board))
}

/// Splits a list line into its optional name and its feature tokens.
fn tokenize(text: &str) -> Result<(Option<String>, Vec<String>), String> {
    let text = text.trim();
    let (mut name, mut body) = (None, text);
    // "name: a > b"
    if let Some((head, tail)) = text.split_once(':') {
        if !head.contains(['>', '≻', '{']) {
            name = Some(head.trim().to_string());
            body = tail.trim();
        }
    }
    // "{a > b}_name"
    if let Some(rest) = body.strip_prefix('{') {
        let close = rest.rfind('}').ok_or("unbalanced brace")?;
        let suffix = rest[close + 1..].trim().trim_start_matches('_').trim();
        if !suffix.is_empty() && name.is_none() {
            name = Some(suffix.to_string());
        }
        body = &rest[..close];
    }
    let tokens: Vec<String> = body.split(['>', '≻']).map(|t| t.trim().to_string()).collect();
    if tokens.iter().any(String::is_empty) {
        return Err("empty feature name".into());
    }
    Ok((name, tokens))
}

/// Parses one list such as `"{M > A > J}"` or `"LIME1: M > A > J"` and
/// validates it against `universe`.
pub fn parse_list(text: &str, universe: &[String]) -> Result<InterpretationList, ListError> {
    let (name, tokens) = tokenize(text).map_err(|message| ListError::Parse { line: 1, message })?;
    InterpretationList::new(tokens, name.as_deref().unwrap_or("list"), universe)
}

/// Record of a repaired list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub provenance: String,
    pub duplicated: String,
    pub replacement: String,
    /// Zero-based rank of the replaced occurrence.
    pub position: usize,
}

impl fmt::Display for RepairRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: second occurrence of {} (rank {}) replaced by missing {}",
            self.provenance,
            self.duplicated,
            self.position + 1,
            self.replacement
        )
    }
}

/// Parses a list, repairing it under `policy` when needed. A valid list is
/// returned with no record.
pub fn repair_list(
    text: &str,
    universe: &[String],
    policy: RepairPolicy,
) -> Result<(InterpretationList, Option<RepairRecord>), ListError> {
    let (name, mut tokens) = tokenize(text).map_err(|message| ListError::Parse { line: 1, message })?;
    let provenance = name.unwrap_or_else(|| "list".to_string());
    match check_permutation(&tokens, universe) {
        Ok(()) => return Ok((InterpretationList::new(tokens, &provenance, universe)?, None)),
        Err(e) if policy == RepairPolicy::Strict => return Err(e),
        Err(_) => {}
    }
    let unrepairable = |reason: String| ListError::Unrepairable { list: 0, reason };
    let known: HashSet<&str> = universe.iter().map(String::as_str).collect();
    if let Some(f) = tokens.iter().find(|f| !known.contains(f.as_str())) {
        return Err(unrepairable(format!("unknown feature {f:?}")));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut duplicated: Vec<&str> = universe.iter().map(String::as_str).filter(|f| counts.get(f).copied().unwrap_or(0) > 1).collect();
    let missing: Vec<&str> = universe.iter().map(String::as_str).filter(|f| !counts.contains_key(f)).collect();
    if duplicated.len() != 1 || missing.len() != 1 || counts[duplicated[0]] != 2 {
        return Err(unrepairable(format!("{} duplicated and {} missing features", duplicated.len(), missing.len())));
    }
    let dup = duplicated.remove(0).to_string();
    let replacement = missing[0].to_string();
    let position = tokens.iter().enumerate().filter(|(_, t)| **t == dup).nth(1).map(|(i, _)| i).expect("counted twice");
    tokens[position] = replacement.clone();
    let list = InterpretationList::new(tokens, &provenance, universe)?;
    let record = RepairRecord { provenance, duplicated: dup, replacement, position };
    log::info!("repaired list: {record}");
    Ok((list, Some(record)))
}

/// `provenance: f1 > f2 > ...`
pub fn format_list(list: &InterpretationList) -> String {
    format!("{}: {}", list.provenance, list.ordered_features.join(" > "))
}

/// Contents of a list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListFile {
    pub universe: Vec<String>,
    pub lists: Vec<InterpretationList>,
    pub repairs: Vec<RepairRecord>,
}

impl ListFile {
    pub fn get(&self, provenance: &str) -> Option<&InterpretationList> {
        self.lists.iter().find(|l| l.provenance == provenance)
    }

    /// Serializes with an explicit `@universe` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("@universe: {}\n", self.universe.join(" > "));
        for list in &self.lists {
            out.push_str(&format_list(list));
            out.push('\n');
        }
        out
    }
}

/// Parses a list file. Errors carry the one-based line number.
pub fn read_list_file(text: &str, policy: RepairPolicy) -> Result<ListFile, ListError> {
    let mut universe: Option<Vec<String>> = None;
    let mut lists = Vec::new();
    let mut repairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| ListError::Parse { line, message };
        if let Some(rest) = trimmed.strip_prefix("@universe:") {
            if universe.is_some() {
                return Err(parse_err("universe declared twice or after a list".into()));
            }
            let (_, tokens) = tokenize(rest).map_err(parse_err)?;
            let mut seen = HashSet::new();
            if let Some(f) = tokens.iter().find(|f| !seen.insert(f.as_str())) {
                return Err(parse_err(format!("feature {f:?} repeated in universe")));
            }
            universe = Some(tokens);
            continue;
        }
        let universe = match &universe {
            Some(u) => u.clone(),
            None => {
                let (_, tokens) = tokenize(trimmed).map_err(parse_err)?;
                universe = Some(tokens.clone());
                tokens
            }
        };
        let (mut list, record) = repair_list(trimmed, &universe, policy).map_err(|e| match e {
            ListError::Parse { message, .. } => parse_err(message),
            other => parse_err(other.at(lists.len()).to_string()),
        })?;
        if list.provenance == "list" {
            list.provenance = format!("list{}", lists.len() + 1);
        }
        lists.push(list);
        repairs.extend(record);
    }
    if lists.is_empty() {
        return Err(ListError::Empty);
    }
    Ok(ListFile { universe: universe.expect("set with the first list"), lists, repairs })
}

pub fn load_list_file(path: impl AsRef<Path>, policy: RepairPolicy) -> Result<ListFile, ListError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ListError::Io { path: path.display().to_string(), source })?;
    read_list_file(&text, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn list(s: &str) -> InterpretationList {
        InterpretationList { ordered_features: names(s), provenance: "t".into(), source_count: 1 }
    }

    fn av(phi: &[f64]) -> AttributionVector {
        AttributionVector::new("t", (1..=phi.len()).map(|i| format!("x{i}")).collect(), phi.to_vec())
    }

    #[test]
    fn composite_mapping_examples() {
        let mag = to_list(&av(&[0.2, -0.7, 0.1]), ListMode::Magnitude, TieRule::FeatureIndex).unwrap();
        assert_eq!(mag.ordered_features, ["x2", "x1", "x3"]);
        let signed = to_list(&av(&[0.2, -0.7, 0.1]), ListMode::Signed, TieRule::FeatureIndex).unwrap();
        assert_eq!(signed.ordered_features, ["x1", "x3", "x2"]);
        let tie = to_list(&av(&[0.5, 0.5]), ListMode::Magnitude, TieRule::FeatureIndex).unwrap();
        assert_eq!(tie.ordered_features, ["x1", "x2"]);
        let zeros = to_list(&av(&[0.0, -0.0, 0.0]), ListMode::Signed, TieRule::FeatureIndex).unwrap();
        assert_eq!(zeros.ordered_features, ["x1", "x2", "x3"]);
        assert!(to_list(&av(&[f64::NAN]), ListMode::Magnitude, TieRule::FeatureIndex).is_err());
    }

    #[test]
    fn borda_examples() {
        let u = names("abc");
        let one = borda_scores(&[list("abc")], &u).unwrap();
        assert_eq!(one.totals, vec![3, 2, 1]);
        assert_eq!(one.position_scores, vec![3, 2, 1]);
        let rev = borda_scores(&[list("abc"), list("cba")], &u).unwrap();
        assert_eq!(rev.totals, vec![4, 4, 4]);
        let (agg, board) = aggregate_with_scores(&[list("abc"), list("bac")], &u, TieRule::FeatureIndex).unwrap();
        assert_eq!(board.totals, vec![5, 5, 2]);
        assert_eq!(agg.ordered_features, names("abc"));
        assert_eq!(agg.provenance, "ensemble");
        assert_eq!(agg.source_count, 2);
        assert_eq!(board.to_csv(), "rank,feature,total\n1,a,5\n2,b,5\n3,c,2\n");
    }

    #[test]
    fn borda_errors_name_list_and_feature() {
        let u = names("abc");
        assert!(matches!(borda_scores(&[], &u), Err(ListError::Empty)));
        let err = borda_scores(&[list("abc"), list("aac")], &u).unwrap_err();
        assert!(matches!(err, ListError::DuplicateFeature { list: 1, ref feature } if feature == "a"));
        let err = borda_scores(&[list("abd")], &u).unwrap_err();
        assert!(matches!(err, ListError::UnknownFeature { list: 0, ref feature } if feature == "d"));
    }

    #[test]
    fn parse_forms() {
        let u = names("AJM");
        let l = parse_list("{M > A > J}", &u).unwrap();
        assert_eq!(l.ordered_features, names("MAJ"));
        let l = parse_list("{M ≻ A ≻ J}_LIME1", &u).unwrap();
        assert_eq!(l.provenance, "LIME1");
        let l = parse_list("  SHAP:  J>M >A ", &u).unwrap();
        assert_eq!((l.provenance.as_str(), l.ordered_features.clone()), ("SHAP", names("JMA")));
        assert_eq!(parse_list(&format_list(&l), &u).unwrap(), l);
        assert!(matches!(parse_list("M > A > Z", &u), Err(ListError::UnknownFeature { .. })));
        assert!(matches!(parse_list("M > A", &u), Err(ListError::MissingFeature { ref feature, .. }) if feature == "J"));
        assert!(matches!(parse_list("M > > A", &u), Err(ListError::Parse { .. })));
    }

    #[test]
    fn repair_policy() {
        let u = names("ABCDEF");
        let (l, rec) = repair_list("P: A > D > B > D > C > E", &u, RepairPolicy::ReplaceSecondDuplicate).unwrap();
        assert_eq!(l.ordered_features, names("ADBFCE"));
        let rec = rec.unwrap();
        assert_eq!((rec.duplicated.as_str(), rec.replacement.as_str(), rec.position), ("D", "F", 3));
        let (same, none) = repair_list("A > B > C > D > E > F", &u, RepairPolicy::ReplaceSecondDuplicate).unwrap();
        assert_eq!(same.ordered_features, u);
        assert!(none.is_none());
        let two = repair_list("A > A > B > B > C > D", &u, RepairPolicy::ReplaceSecondDuplicate);
        assert!(matches!(two, Err(ListError::Unrepairable { .. })));
        let strict = repair_list("A > D > B > D > C > E", &u, RepairPolicy::Strict);
        assert!(matches!(strict, Err(ListError::DuplicateFeature { ref feature, .. }) if feature == "D"));
    }

    #[test]
    fn list_file_round_trip() {
        let text = "# c\n@universe: a > b > c\nX: c > a > b\n\nb > a > c\n";
        let file = read_list_file(text, RepairPolicy::Strict).unwrap();
        assert_eq!(file.universe, names("abc"));
        assert_eq!(file.lists[1].provenance, "list2");
        assert_eq!(read_list_file(&file.to_text(), RepairPolicy::Strict).unwrap(), file);
        let implicit = read_list_file("c > b > a\na > b > c", RepairPolicy::Strict).unwrap();
        assert_eq!(implicit.universe, names("cba"));
        let err = read_list_file("@universe: a > b\nX: a > a\n", RepairPolicy::Strict).unwrap_err();
        assert!(matches!(err, ListError::Parse { line: 2, .. }));
        assert!(matches!(read_list_file("# nothing\n", RepairPolicy::Strict), Err(ListError::Empty)));
    }

    /// Reference Borda: for every feature, scan every list for its position.
    fn brute_force(lists: &[Vec<usize>], n: usize) -> Vec<usize> {
        let mut totals = vec![0usize; n];
        for (f, total) in totals.iter_mut().enumerate() {
            for l in lists {
                let mut pos = 0;
                while l[pos] != f {
                    pos += 1;
                }
                *total += n - pos;
            }
        }
        let mut out = Vec::new();
        let mut used = vec![false; n];
        for _ in 0..n {
            let mut best = None;
            for f in 0..n {
                if !used[f] && best.is_none_or(|b: usize| totals[f] > totals[b]) {
                    best = Some(f);
                }
            }
            used[best.unwrap()] = true;
            out.push(best.unwrap());
        }
        out
    }

    fn perm_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..n).collect::<Vec<_>>()).prop_shuffle()
    }

    fn lists_strategy() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
        (1usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec(perm_strategy(n), 1..6)))
    }

    fn as_lists(n: usize, perms: &[Vec<usize>]) -> (Vec<String>, Vec<InterpretationList>) {
        let u: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
        let lists = perms
            .iter()
            .map(|p| InterpretationList { ordered_features: p.iter().map(|&i| u[i].clone()).collect(), provenance: "p".into(), source_count: 1 })
            .collect();
        (u, lists)
    }

    proptest! {
        #[test]
        fn aggregate_is_permutation_invariant((n, perms) in lists_strategy(), rot in 0usize..6) {
            let (u, mut lists) = as_lists(n, &perms);
            let a = aggregate(&lists, &u, TieRule::FeatureIndex).unwrap();
            let k = rot % lists.len();
            lists.rotate_left(k);
            lists.reverse();
            prop_assert_eq!(aggregate(&lists, &u, TieRule::FeatureIndex).unwrap(), a);
        }

        #[test]
        fn conservation_and_brute_force((n, perms) in lists_strategy()) {
            let (u, lists) = as_lists(n, &perms);
            let board = borda_scores(&lists, &u).unwrap();
            prop_assert_eq!(board.totals.iter().sum::<u64>(), (lists.len() * n * (n + 1) / 2) as u64);
            let agg = aggregate(&lists, &u, TieRule::FeatureIndex).unwrap();
            let expected: Vec<String> = brute_force(&perms, n).into_iter().map(|i| u[i].clone()).collect();
            prop_assert_eq!(agg.ordered_features, expected);
        }

        #[test]
        fn unanimity((n, mut perms) in lists_strategy(), top in 0usize..8) {
            let top = top % n;
            for p in &mut perms {
                let at = p.iter().position(|&f| f == top).unwrap();
                p.remove(at);
                p.insert(0, top);
            }
            let (u, lists) = as_lists(n, &perms);
            let board = borda_scores(&lists, &u).unwrap();
            prop_assert_eq!(board.totals[top], (lists.len() * n) as u64);
            prop_assert_eq!(&aggregate(&lists, &u, TieRule::FeatureIndex).unwrap().ordered_features[0], &u[top]);
        }

        #[test]
        fn consensus_is_idempotent(p in (1usize..10).prop_flat_map(perm_strategy), m in 1usize..6) {
            let n = p.len();
            let (u, lists) = as_lists(n, &vec![p; m]);
            prop_assert_eq!(&aggregate(&lists, &u, TieRule::FeatureIndex).unwrap().ordered_features, &lists[0].ordered_features);
        }

        #[test]
        fn to_list_is_scale_invariant(phi in prop::collection::vec(-1e3f64..1e3, 1..12), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = phi.iter().map(|v| v * c).collect();
            for mode in [ListMode::Magnitude, ListMode::Signed] {
                // Scaling can merge or split exact ties through rounding, so
                // compare against the order of the scaled keys themselves.
                let a = to_list(&av(&phi), mode, TieRule::FeatureIndex).unwrap();
                let b = to_list(&av(&scaled), mode, TieRule::FeatureIndex).unwrap();
                let distinct = |v: &[f64]| {
                    let mut k: Vec<f64> = v.iter().map(|x| if mode == ListMode::Magnitude { x.abs() } else { *x }).collect();
                    k.sort_by(f64::total_cmp);
                    k.windows(2).all(|w| w[0] != w[1])
                };
                if distinct(&phi) && distinct(&scaled) {
                    prop_assert_eq!(a.ordered_features, b.ordered_features);
                }
            }
        }

        #[test]
        fn to_list_is_a_permutation(phi in prop::collection::vec(-5.0f64..5.0, 1..15)) {
            let l = to_list(&av(&phi), ListMode::Magnitude, TieRule::FeatureIndex).unwrap();
            prop_assert!(check_permutation(&l.ordered_features, &av(&phi).feature_names).is_ok());
        }
    }
}
