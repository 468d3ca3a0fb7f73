//! Bundled reference data: the UCI wine recognition data, the published
//! wine and natural-gas interpretation lists, and their expert labels.
//!
//! List fixtures use single-letter marks; `*_MARKS_CSV` maps them to the
//! full feature names.

use crate::data::{read_csv, DataError, Dataset};
use crate::evaluation::{EvalError, ReferenceLabel};
use crate::listspace::{read_list_file, ListError, ListFile, RepairPolicy};

pub const WINE_CSV: &str = include_str!("../fixtures/wine.csv");
pub const WINE_TARGET: &str = "class";
pub const WINE_MARKS_CSV: &str = include_str!("../fixtures/wine_marks.csv");
pub const WINE_LIME_LISTS: &str = include_str!("../fixtures/wine_lime.lists");
pub const WINE_LABEL_LIST: &str = include_str!("../fixtures/wine_label.list");
pub const WINE_ENSEMBLE_PRINTED_LIST: &str = include_str!("../fixtures/wine_ensemble_printed.list");

pub const GAS_SCHEMA_CSV: &str = include_str!("../fixtures/gas_schema.csv");
pub const GAS_MARKS_CSV: &str = include_str!("../fixtures/gas_marks.csv");
pub const GAS_METHOD_LISTS: &str = include_str!("../fixtures/gas_methods.lists");
pub const GAS_LABEL_LIST: &str = include_str!("../fixtures/gas_label.list");
pub const GAS_ENSEMBLE_PRINTED_LIST: &str = include_str!("../fixtures/gas_ensemble_printed.list");

/// Published L-scores of the eleven wine lists and their ensemble, as printed.
pub const WINE_PRINTED_SCORES: [(&str, &str); 12] = [
    ("LIME1", "0.3846"),
    ("LIME2", "0.6923"),
    ("LIME3", "0.8462"),
    ("LIME4", "0.6153"),
    ("LIME5", "0.5385"),
    ("LIME6", "0.6923"),
    ("LIME7", "0.8462"),
    ("LIME8", "0.6923"),
    ("LIME9", "0.8462"),
    ("LIME10", "0.6923"),
    ("LIME11", "0.5385"),
    ("ensemble", "1.0000"),
];

/// Published Borda totals of the eleven wine lists.
pub const WINE_BORDA_TOTALS: [(&str, u64); 13] = [
    ("M", 143),
    ("A", 131),
    ("J", 122),
    ("B", 110),
    ("K", 98),
    ("E", 85),
    ("C", 77),
    ("G", 60),
    ("D", 55),
    ("F", 43),
    ("I", 40),
    ("L", 22),
    ("H", 15),
];

/// Published L-score of the natural-gas ensemble list.
pub const GAS_ENSEMBLE_L_SCORE: &str = "0.9000";

/// The wine data with full column names.
pub fn wine_dataset() -> Result<Dataset, DataError> {
    read_csv(WINE_CSV.as_bytes(), WINE_TARGET)
}

/// `(mark, full name)` pairs in column order.
pub fn marks(csv_text: &str) -> Vec<(String, String)> {
    csv_text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| l.split_once(','))
        .map(|(m, f)| (m.trim().to_string(), f.trim().to_string()))
        .collect()
}

/// The wine data with columns renamed to their marks `A`..`M`, matching the
/// list fixtures.
pub fn wine_dataset_marked() -> Result<Dataset, DataError> {
    let ds = wine_dataset()?;
    let names: Vec<String> = marks(WINE_MARKS_CSV).into_iter().map(|(m, _)| m).collect();
    Dataset::new(names, ds.rows().to_vec(), ds.targets().to_vec(), ds.class_names().to_vec())
}

pub fn wine_lime_lists() -> Result<ListFile, ListError> {
    read_list_file(WINE_LIME_LISTS, RepairPolicy::Strict)
}

pub fn wine_label() -> Result<ReferenceLabel, EvalError> {
    ReferenceLabel::parse(WINE_LABEL_LIST, "wine expert label")
}

pub fn wine_ensemble_printed() -> Result<ListFile, ListError> {
    read_list_file(WINE_ENSEMBLE_PRINTED_LIST, RepairPolicy::Strict)
}

/// The natural-gas lists as printed; the PFI row only loads with
/// [`RepairPolicy::ReplaceSecondDuplicate`].
pub fn gas_method_lists(policy: RepairPolicy) -> Result<ListFile, ListError> {
    read_list_file(GAS_METHOD_LISTS, policy)
}

pub fn gas_label() -> Result<ReferenceLabel, EvalError> {
    ReferenceLabel::parse(GAS_LABEL_LIST, "natural-gas expert label")
}

pub fn gas_ensemble_printed() -> Result<ListFile, ListError> {
    read_list_file(GAS_ENSEMBLE_PRINTED_LIST, RepairPolicy::Strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        let ds = wine_dataset_marked().unwrap();
        assert_eq!((ds.n_samples(), ds.n_features(), ds.n_classes()), (178, 13, 3));
        assert_eq!(ds.class_counts(), vec![59, 71, 48]);
        assert_eq!(wine_lime_lists().unwrap().lists.len(), 11);
        assert_eq!(wine_label().unwrap().len(), 13);
        assert_eq!(gas_label().unwrap().len(), 20);
        assert_eq!(marks(GAS_MARKS_CSV).len(), 20);
        assert_eq!(GAS_SCHEMA_CSV.trim().split(',').count(), 21);
        assert!(gas_method_lists(RepairPolicy::Strict).is_err());
        let gas = gas_method_lists(RepairPolicy::ReplaceSecondDuplicate).unwrap();
        assert_eq!(gas.lists.len(), 7);
        assert_eq!(gas.repairs.len(), 1);
    }
}
