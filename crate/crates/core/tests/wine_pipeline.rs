//! End-to-end checks on the bundled wine data.

use ensemble_interp::data::{split, split_indices};
use ensemble_interp::fixtures;
use ensemble_interp::model_zoo::{accuracy, train, ModelKind, ModelSpec, Params, Predictor};

#[test]
fn stratified_split_sizes() {
    let ds = fixtures::wine_dataset().unwrap();
    let (train_idx, test_idx) = split_indices(&ds, 0.3, 42).unwrap();
    assert_eq!((train_idx.len(), test_idx.len()), (124, 54));
    // ceil(0.3 * 178) = 54 apportioned over 59/71/48: exact shares
    // 17.90, 21.54, 14.56 -> floors 17, 21, 14 plus the two largest remainders.
    let mut per_class = [0usize; 3];
    for &i in &test_idx {
        per_class[ds.targets()[i]] += 1;
    }
    assert_eq!(per_class, [18, 21, 15]);
    let mut all: Vec<usize> = train_idx.iter().chain(&test_idx).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..178).collect::<Vec<_>>());
    assert_eq!(split_indices(&ds, 0.3, 42).unwrap(), (train_idx, test_idx));
}

#[test]
fn random_forest_accuracy_and_mean_of_trees() {
    let ds = fixtures::wine_dataset().unwrap();
    let (tr, te) = split(&ds, 0.3, 42).unwrap();
    let model = train(&tr, &ModelSpec::new(ModelKind::RandomForest).with_seed(42)).unwrap();
    let acc = accuracy(&model, &te).unwrap();
    assert!(acc >= 0.85, "accuracy {acc}");

    let Params::RandomForest(rf) = model.params() else { panic!("not a forest") };
    assert_eq!(rf.trees().len(), 100);
    for row in te.rows().iter().take(10) {
        let mut mean = vec![0.0; 3];
        for t in rf.trees() {
            for (m, v) in mean.iter_mut().zip(t.leaf_value(row)) {
                *m += v / rf.trees().len() as f64;
            }
        }
        let got = model.predict_proba(row).unwrap();
        for (a, b) in got.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn every_kind_learns_wine() {
    let ds = fixtures::wine_dataset().unwrap();
    let (tr, te) = split(&ds, 0.3, 42).unwrap();
    for kind in ModelKind::ALL {
        let model = train(&tr, &ModelSpec::new(kind).with_seed(1)).unwrap();
        let acc = accuracy(&model, &te).unwrap();
        assert!(acc >= 0.8, "{kind}: {acc}");
    }
}

#[test]
fn training_ignores_row_order() {
    let ds = fixtures::wine_dataset().unwrap();
    let reversed: Vec<usize> = (0..ds.n_samples()).rev().collect();
    let shuffled = ds.select_rows(&reversed).unwrap();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind).with_seed(5);
        let a = train(&ds, &spec).unwrap();
        let b = train(&shuffled, &spec).unwrap();
        assert_eq!(a.predict_proba(ds.row(7)).unwrap(), b.predict_proba(ds.row(7)).unwrap(), "{kind}");
    }
}
