//! Published list fixtures checked against independent tallies.

use std::collections::HashMap;

use ensemble_interp::evaluation::{kendall_tau_distance, l_score, l_score_count, score_table};
use ensemble_interp::fixtures::{self, WINE_BORDA_TOTALS, WINE_PRINTED_SCORES};
use ensemble_interp::listspace::{aggregate, aggregate_with_scores, RepairPolicy, TieRule};

/// Splits `name: a > b > ...` lines by hand, skipping comments and directives.
fn raw_lists(text: &str) -> Vec<(String, Vec<String>)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('@'))
        .map(|l| {
            let (name, body) = l.split_once(':').unwrap();
            (name.trim().to_string(), body.split('>').map(|t| t.trim().to_string()).collect())
        })
        .collect()
}

#[test]
fn wine_borda_totals_match_positional_tally() {
    let raw = raw_lists(fixtures::WINE_LIME_LISTS);
    assert_eq!(raw.len(), 11);
    let mut tally: HashMap<String, u64> = HashMap::new();
    for (_, features) in &raw {
        let n = features.len() as u64;
        for (pos, f) in features.iter().enumerate() {
            *tally.entry(f.clone()).or_default() += n - pos as u64;
        }
    }
    for (f, total) in WINE_BORDA_TOTALS {
        assert_eq!(tally[f], total, "oracle tally for {f}");
    }

    let file = fixtures::wine_lime_lists().unwrap();
    let (list, board) = aggregate_with_scores(&file.lists, &file.universe, TieRule::FeatureIndex).unwrap();
    for (f, total) in WINE_BORDA_TOTALS {
        assert_eq!(board.total(f), Some(total));
    }
    let expected: Vec<&str> = WINE_BORDA_TOTALS.iter().map(|(f, _)| *f).collect();
    assert_eq!(list.ordered_features, expected);
    assert_eq!(list.ordered_features, fixtures::wine_ensemble_printed().unwrap().lists[0].ordered_features);
    assert_eq!(board.totals.iter().sum::<u64>(), 11 * 13 * 14 / 2);
}

#[test]
fn wine_scores_match_positional_oracle() {
    let file = fixtures::wine_lime_lists().unwrap();
    let label = fixtures::wine_label().unwrap();
    let raw_label = &raw_lists(fixtures::WINE_LABEL_LIST)[0].1;
    let mut lists = file.lists.clone();
    lists.push(aggregate(&file.lists, &file.universe, TieRule::FeatureIndex).unwrap());
    let table = score_table(&lists, &label).unwrap();
    let raw = raw_lists(fixtures::WINE_LIME_LISTS);
    for ((name, features), row) in raw.iter().zip(&table.rows) {
        assert_eq!(name, &row.name);
        let oracle = features.iter().zip(raw_label).filter(|(a, b)| a == b).count();
        assert_eq!(row.matches, oracle, "{name}");
    }
    assert_eq!(table.get("ensemble").unwrap().matches, 13);
}

#[test]
fn published_wine_scores_versus_lists() {
    let file = fixtures::wine_lime_lists().unwrap();
    let label = fixtures::wine_label().unwrap();
    let mut lists = file.lists.clone();
    lists.push(aggregate(&file.lists, &file.universe, TieRule::FeatureIndex).unwrap());
    let table = score_table(&lists, &label).unwrap();
    for ((name, printed), row) in WINE_PRINTED_SCORES.iter().zip(&table.rows) {
        let ours = format!("{:.4}", row.l_score);
        match *name {
            // 8/13 = 0.61538..., printed truncated.
            "LIME4" => assert_eq!((ours.as_str(), *printed), ("0.6154", "0.6153")),
            // The printed list matches the label at 10 positions, not 9.
            "LIME6" => assert_eq!((row.matches, *printed), (10, "0.6923")),
            _ => assert_eq!(&ours, printed, "{name}"),
        }
    }
}

#[test]
fn gas_printed_ensemble_scores_point_nine() {
    let printed = fixtures::gas_ensemble_printed().unwrap();
    let label = fixtures::gas_label().unwrap();
    assert_eq!(l_score_count(&printed.lists[0], &label).unwrap(), 18);
    assert_eq!(format!("{:.4}", l_score(&printed.lists[0], &label).unwrap()), fixtures::GAS_ENSEMBLE_L_SCORE);
}

#[test]
fn gas_pfi_row_is_repaired_once() {
    let file = fixtures::gas_method_lists(RepairPolicy::ReplaceSecondDuplicate).unwrap();
    assert_eq!(file.repairs.len(), 1);
    let rec = &file.repairs[0];
    assert_eq!((rec.provenance.as_str(), rec.duplicated.as_str(), rec.replacement.as_str()), ("PFI", "D", "F"));
    let raw = raw_lists(fixtures::GAS_METHOD_LISTS);
    let pfi = &raw.iter().find(|(n, _)| n == "PFI").unwrap().1;
    assert_eq!(pfi.iter().filter(|f| *f == "D").count(), 2);
    assert_eq!(pfi[rec.position], "D");
    let repaired = file.get("PFI").unwrap();
    for (i, (a, b)) in pfi.iter().zip(&repaired.ordered_features).enumerate() {
        if i == rec.position {
            assert_eq!(b, "F");
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn gas_ensemble_distance_to_printed_is_reported() {
    // Informational: the aggregate of the repaired lists differs from the
    // printed ensemble; the acceptance suite reports the gap.
    let file = fixtures::gas_method_lists(RepairPolicy::ReplaceSecondDuplicate).unwrap();
    let ours = aggregate(&file.lists, &file.universe, TieRule::FeatureIndex).unwrap();
    let printed = fixtures::gas_ensemble_printed().unwrap();
    let d = kendall_tau_distance(&ours, &printed.lists[0]).unwrap();
    assert!(d <= 190);
    assert_eq!(ours.ordered_features[0], "Q");
}
