use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ensemble_interp::fixtures;
use ensemble_interp_cli::manifest::{sha256_hex, Manifest};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemble-interp")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn label_scores_perfectly_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let label = fixture("wine_label.list");
    ok(&["score", "--list", p(&label), "--label", p(&label), "--out", p(dir.path())]);
    let csv = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",13,13,1.0000"), "{csv}");
}

#[test]
fn wine_lists_give_the_printed_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["ensemble", "--lists", p(&fixture("wine_lime.lists")), "--out", p(dir.path())]);
    assert_eq!(stdout.trim(), "ensemble: M > A > J > B > K > E > C > G > D > F > I > L > H");
    let board = std::fs::read_to_string(dir.path().join("scoreboard.csv")).unwrap();
    assert!(board.starts_with("rank,feature,total\n1,M,143\n2,A,131\n"), "{board}");
}

#[test]
fn malformed_list_is_a_list_error_unless_repaired() {
    let dir = tempfile::tempdir().unwrap();
    let lists = fixture("gas_methods.lists");
    let out = cli(&["ensemble", "--lists", p(&lists), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "list");

    ok(&["ensemble", "--lists", p(&lists), "--repair-policy", "replace-second-duplicate", "--out", p(dir.path())]);
    let repairs = std::fs::read_to_string(dir.path().join("repairs.txt")).unwrap();
    assert!(repairs.contains("PFI") && repairs.contains("replaced by missing F"), "{repairs}");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = cli(&["score", "--list"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
    assert!(cli(&["--help"]).status.success());
}

#[test]
fn missing_input_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["score", "--list", "/no/such/list", "--label", "/no/such/label", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "io");
}

#[test]
fn train_predict_explain_select_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("wine.csv");
    let digest_before = sha256_hex(&std::fs::read(&data).unwrap());
    let d = |name: &str| dir.path().join(name);

    ok(&["train", "--data", p(&data), "--target", "class", "--model", "logistic", "--out", p(&d("train"))]);
    let model = d("train").join("model.json");
    ok(&["predict", "--data", p(&data), "--target", "class", "--model", p(&model), "--out", p(&d("predict"))]);
    let preds = std::fs::read_to_string(d("predict").join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 179);

    ok(&[
        "explain", "--data", p(&data), "--target", "class", "--model", p(&model), "--method", "lime", "--instance", "0",
        "--param", "n_perturb=300", "--m", "3", "--out", p(&d("explain")),
    ]);
    for f in ["attributions/LIME1.json", "attributions/LIME3.json", "lists.list", "ensemble.list", "scoreboard.csv"] {
        assert!(d("explain").join(f).exists(), "{f}");
    }
    ok(&[
        "explain", "--data", p(&data), "--target", "class", "--model", p(&model), "--method", "pfi", "--param", "repeats=2",
        "--out", p(&d("pfi")),
    ]);

    ok(&[
        "select", "--data", p(&data), "--target", "class", "--lists", p(&d("explain").join("ensemble.list")), "--sizes",
        "3,all", "--models", "logistic,gaussian_nb", "--out", p(&d("select")),
    ]);
    let csv = std::fs::read_to_string(d("select").join("selection.csv")).unwrap();
    assert!(csv.contains("logistic,ensemble,3,") && csv.contains("gaussian_nb,correlation,13,"), "{csv}");

    for step in ["train", "explain", "select"] {
        let manifest = d(step).join("manifest.json");
        let stdout = ok(&["rerun", "--manifest", p(&manifest), "--out", p(&d(&format!("{step}_again")))]);
        assert!(stdout.contains("bitwise"), "{stdout}");
    }
    let m = Manifest::load(&d("explain").join("manifest.json")).unwrap();
    assert!(m.command.iter().all(|a| a != "--out"));
    assert!(m.inputs.iter().any(|i| i.sha256 == digest_before));
    assert_eq!(sha256_hex(&std::fs::read(&data).unwrap()), digest_before);
}

#[test]
fn unknown_explainer_parameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("wine.csv");
    ok(&["train", "--data", p(&data), "--target", "class", "--model", "gaussian_nb", "--out", p(dir.path())]);
    let model = dir.path().join("model.json");
    let out = cli(&[
        "explain", "--data", p(&data), "--target", "class", "--model", p(&model), "--method", "pdp", "--param", "depth=3",
        "--out", p(&dir.path().join("x")),
    ]);
    assert_eq!(error_kind(&out), "config");
}

#[test]
fn run_config_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    // The bundled label uses single-letter marks; the data uses full names.
    let names: std::collections::HashMap<String, String> = fixtures::marks(fixtures::WINE_MARKS_CSV).into_iter().collect();
    let label: Vec<&str> = fixtures::wine_label().unwrap().ordered_features.iter().map(|m| names[m].as_str()).collect();
    let label_path = dir.path().join("label.list");
    std::fs::write(&label_path, format!("label: {}\n", label.join(" > "))).unwrap();
    let config = serde_json::json!({
        "data": fixture("wine.csv"),
        "target": "class",
        "model": "decision_tree",
        "roster": [
            { "explainer": { "method": "lime", "n_perturb": 200, "ridge": 0.001 } },
            { "explainer": { "method": "pdp", "grid_points": 8 } },
            { "explainer": { "method": "gsm", "depth": 3 }, "seed": 5 }
        ],
        "m": 2,
        "label": label_path,
        "output_dir": dir.path().join("out"),
        "seed": 3
    });
    let path = dir.path().join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    ok(&["run", "--config", p(&path)]);
    let out = dir.path().join("out");
    let lists = std::fs::read_to_string(out.join("lists.list")).unwrap();
    assert_eq!(lists.lines().count(), 7, "{lists}");
    assert!(out.join("scores.csv").exists());
    ok(&["rerun", "--manifest", p(&out.join("manifest.json")), "--out", p(&dir.path().join("again"))]);
}
