use std::path::Path;

use anyhow::{Context, Result};
use ensemble_interp::data::{read_csv, split};
use ensemble_interp::evaluation::{score_table, ReferenceLabel};
use ensemble_interp::explainers::{AttributionVector, ExplainerConfig};
use ensemble_interp::listspace::{
    aggregate_with_scores, read_list_file, to_list, InterpretationList, ListFile, ListMode, RepairPolicy, TieRule,
};
use ensemble_interp::model_zoo::{accuracy, train as train_model, Model, ModelKind, ModelSpec, Predictor};
use ensemble_interp::rng::derive_seed;
use ensemble_interp::selection::{retrain_compare, sweep_subsets};
use ensemble_interp::Dataset;
use serde_json::json;

use crate::args::{DataArgs, EnsembleArgs, ExplainArgs, PredictArgs, ScoreArgs, SelectArgs, TrainArgs};
use crate::failure;
use crate::manifest::Recorder;

pub(crate) fn load_dataset(rec: &mut Recorder, path: &Path, target: &str) -> Result<Dataset> {
    let bytes = rec.read_input(path)?;
    read_csv(bytes.as_slice(), target).with_context(|| format!("loading {}", path.display()))
}

fn load_data(rec: &mut Recorder, args: &DataArgs) -> Result<Dataset> {
    load_dataset(rec, &args.data, &args.target)
}

pub(crate) fn load_model(rec: &mut Recorder, path: &Path) -> Result<Model> {
    let text = rec.read_input_string(path)?;
    Model::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

/// Parses a spec; the global seed applies unless the spec names its own.
pub(crate) fn parse_spec(text: &str, seed: u64) -> Result<ModelSpec> {
    let spec = ModelSpec::parse(text)?;
    Ok(if text.contains("seed=") { spec } else { spec.with_seed(seed) })
}

/// Default config for `method` with `name=value` overrides applied.
pub(crate) fn explainer_config(method: &str, overrides: &[String]) -> Result<ExplainerConfig> {
    let base = ExplainerConfig::default_for(method)?;
    if overrides.is_empty() {
        return Ok(base);
    }
    let mut value = serde_json::to_value(&base)?;
    let obj = value.as_object_mut().expect("configs serialize to objects");
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| failure("config", format!("parameter {o:?} is not name=value")))?;
        if k == "method" || !(obj.contains_key(k) || k == "kernel_width") {
            return Err(failure("config", format!("{method} has no parameter {k:?}")));
        }
        let parsed: serde_json::Value =
            serde_json::from_str(v).map_err(|_| failure("config", format!("parameter {k} has non-numeric value {v:?}")))?;
        obj.insert(k.to_string(), parsed);
    }
    serde_json::from_value(value).map_err(|e| failure("config", format!("invalid parameters for {method}: {e}")))
}

fn class_index(model: &Model, name: Option<&str>) -> Result<Option<usize>> {
    name.map(|n| {
        model
            .class_names()
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| failure("config", format!("model has no class {n:?}; classes: {}", model.class_names().join(", "))))
    })
    .transpose()
}

/// Seed of run `k` out of `m`: the base seed itself when `m == 1`.
pub(crate) fn run_seed(seed: u64, method: &str, k: usize, m: usize) -> u64 {
    if m == 1 { seed } else { derive_seed(seed, method, k as u64) }
}

/// Capitalised method id plus a one-based run number, e.g. `LIME3`.
pub(crate) fn list_name(method: &str, k: usize, m: usize) -> String {
    let base = method.to_uppercase();
    if m == 1 { base } else { format!("{base}{}", k + 1) }
}

pub(crate) fn list_file_text(universe: &[String], lists: &[InterpretationList]) -> String {
    ListFile { universe: universe.to_vec(), lists: lists.to_vec(), repairs: Vec::new() }.to_text()
}

pub fn train(a: &TrainArgs, recorded: Vec<String>) -> Result<()> {
    let mut rec = Recorder::new(&a.out, recorded)?;
    let ds = load_data(&mut rec, &a.data)?;
    let spec = parse_spec(&a.model, a.seed)?;
    rec.seed("split", a.seed);
    rec.seed("model", spec.seed);
    rec.set_config(&json!({ "model": spec.to_string(), "test_fraction": a.test_fraction, "target": a.data.target }))?;
    let metrics = if a.test_fraction == 0.0 {
        let model = train_model(&ds, &spec)?;
        rec.write("model.json", model.to_json())?;
        json!({ "train_size": ds.n_samples(), "train_accuracy": accuracy(&model, &ds)? })
    } else {
        let (tr, te) = split(&ds, a.test_fraction, a.seed)?;
        let model = train_model(&tr, &spec)?;
        rec.write("model.json", model.to_json())?;
        let acc = accuracy(&model, &te)?;
        println!("{}: test accuracy {acc:.4} ({} train / {} test rows)", spec.kind, tr.n_samples(), te.n_samples());
        json!({ "train_size": tr.n_samples(), "test_size": te.n_samples(), "test_accuracy": acc, "train_accuracy": accuracy(&model, &tr)? })
    };
    rec.write_json("metrics.json", &metrics)?;
    rec.finish()?;
    Ok(())
}

pub fn predict(a: &PredictArgs, recorded: Vec<String>) -> Result<()> {
    let mut rec = Recorder::new(&a.out, recorded)?;
    let ds = load_data(&mut rec, &a.data)?;
    let model = load_model(&mut rec, &a.model)?;
    let mut csv = format!("row,predicted,{}\n", model.class_names().iter().map(|c| format!("p_{c}")).collect::<Vec<_>>().join(","));
    let map = model.column_map(ds.feature_names())?;
    let mut correct = 0usize;
    for (i, row) in ds.rows().iter().enumerate() {
        let x: Vec<f64> = map.iter().map(|&j| row[j]).collect();
        let p = model.predict_proba(&x)?;
        let k = ensemble_interp::model_zoo::argmax(&p);
        let predicted = &model.class_names()[k];
        if ds.class_names()[ds.targets()[i]] == *predicted {
            correct += 1;
        }
        let probs: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        csv.push_str(&format!("{i},{predicted},{}\n", probs.join(",")));
    }
    rec.write("predictions.csv", csv)?;
    rec.write_json("metrics.json", &json!({ "rows": ds.n_samples(), "accuracy": correct as f64 / ds.n_samples() as f64 }))?;
    rec.finish()?;
    Ok(())
}

pub fn explain(a: &ExplainArgs, recorded: Vec<String>) -> Result<()> {
    if a.m == 0 {
        return Err(failure("config", "--m must be at least 1"));
    }
    let mut rec = Recorder::new(&a.out, recorded)?;
    let ds = load_data(&mut rec, &a.data)?;
    let model = load_model(&mut rec, &a.model)?;
    let config = explainer_config(&a.method, &a.params)?;
    if let Some(i) = a.instance {
        if i >= ds.n_samples() {
            return Err(failure("config", format!("instance {i} out of range for {} rows", ds.n_samples())));
        }
    }
    let class = class_index(&model, a.class_name.as_deref())?;
    let mode: ListMode = a.mode.into();
    rec.set_config(&json!({ "explainer": config, "instance": a.instance, "class": a.class_name, "m": a.m, "mode": mode }))?;
    rec.seed("explainer", a.seed);

    let mut lists = Vec::new();
    for k in 0..a.m {
        let seed = run_seed(a.seed, &a.method, k, a.m);
        let av = config.run(&model, &ds, a.instance, seed, class)?;
        let name = list_name(config.method_id(), k, a.m);
        let file = if a.m == 1 { "attribution.json".to_string() } else { format!("attributions/{name}.json") };
        rec.write(&file, av.to_json() + "\n")?;
        let mut list = to_list(&av, mode, TieRule::FeatureIndex)?;
        list.provenance = name;
        lists.push(list);
    }
    rec.write("lists.list", list_file_text(model.feature_names(), &lists))?;
    if a.m > 1 {
        let (ens, board) = aggregate_with_scores(&lists, model.feature_names(), TieRule::FeatureIndex)?;
        rec.write("ensemble.list", list_file_text(model.feature_names(), std::slice::from_ref(&ens)))?;
        rec.write("scoreboard.csv", board.to_csv())?;
        println!("{ens}");
    } else {
        println!("{}", lists[0]);
    }
    rec.finish()?;
    Ok(())
}

fn load_label(rec: &mut Recorder, path: &Path) -> Result<ReferenceLabel> {
    let text = rec.read_input_string(path)?;
    Ok(ReferenceLabel::parse(&text, &path.display().to_string())?)
}

pub fn ensemble(a: &EnsembleArgs, recorded: Vec<String>) -> Result<()> {
    let mut rec = Recorder::new(&a.out, recorded)?;
    let policy: RepairPolicy = a.repair_policy.into();
    let mode: ListMode = a.mode.into();
    rec.set_config(&json!({ "mode": mode, "repair_policy": policy }))?;
    let mut universe: Option<Vec<String>> = None;
    let mut lists = Vec::new();
    let mut repairs = Vec::new();
    if let Some(path) = &a.lists {
        let text = rec.read_input_string(path)?;
        let file = read_list_file(&text, policy).with_context(|| format!("reading {}", path.display()))?;
        universe = Some(file.universe);
        lists.extend(file.lists);
        repairs.extend(file.repairs);
    }
    for path in &a.attributions {
        let text = rec.read_input_string(path)?;
        let av = AttributionVector::from_json(&text).with_context(|| format!("reading {}", path.display()))?;
        let list = to_list(&av, mode, TieRule::FeatureIndex)?;
        universe.get_or_insert_with(|| av.feature_names.clone());
        lists.push(list);
    }
    let universe = universe.ok_or_else(|| failure("config", "no lists given"))?;
    let (ens, board) = aggregate_with_scores(&lists, &universe, TieRule::FeatureIndex)?;
    rec.write("ensemble.list", list_file_text(&universe, std::slice::from_ref(&ens)))?;
    rec.write("scoreboard.csv", board.to_csv())?;
    if !repairs.is_empty() {
        let text: String = repairs.iter().map(|r| format!("{r}\n")).collect();
        rec.write("repairs.txt", text)?;
    }
    if let Some(label_path) = &a.label {
        let label = load_label(&mut rec, label_path)?;
        let mut all = lists.clone();
        all.push(ens.clone());
        let table = score_table(&all, &label)?;
        rec.write("scores.csv", table.to_csv())?;
        rec.write("scores.md", table.to_markdown())?;
    }
    println!("{ens}");
    rec.finish()?;
    Ok(())
}

pub fn score(a: &ScoreArgs, recorded: Vec<String>) -> Result<()> {
    let mut rec = Recorder::new(&a.out, recorded)?;
    let policy: RepairPolicy = a.repair_policy.into();
    rec.set_config(&json!({ "repair_policy": policy }))?;
    let text = rec.read_input_string(&a.list)?;
    let file = read_list_file(&text, policy).with_context(|| format!("reading {}", a.list.display()))?;
    let label = load_label(&mut rec, &a.label)?;
    let table = score_table(&file.lists, &label)?;
    rec.write("scores.csv", table.to_csv())?;
    rec.write("scores.md", table.to_markdown())?;
    print!("{}", table.to_markdown());
    rec.finish()?;
    Ok(())
}

pub(crate) fn parse_sizes(sizes: &[String], n_features: usize) -> Result<Vec<usize>> {
    sizes
        .iter()
        .map(|s| match s.trim() {
            "all" => Ok(n_features),
            t => t.parse::<usize>().map_err(|_| failure("config", format!("bad subset size {t:?}"))),
        })
        .collect()
}

pub(crate) fn parse_kinds(models: &[String], seed: u64) -> Result<Vec<ModelSpec>> {
    models.iter().map(|m| Ok(ModelSpec::new(m.trim().parse::<ModelKind>()?).with_seed(seed))).collect()
}

pub fn select(a: &SelectArgs, recorded: Vec<String>) -> Result<()> {
    let mut rec = Recorder::new(&a.out, recorded)?;
    let ds = load_data(&mut rec, &a.data)?;
    let text = rec.read_input_string(&a.lists)?;
    let file = read_list_file(&text, RepairPolicy::Strict)?;
    let list = file.get("ensemble").unwrap_or(&file.lists[0]).clone();
    let sizes = parse_sizes(&a.sizes, ds.n_features())?;
    let specs = parse_kinds(&a.models, a.seed)?;
    rec.seed("split", a.seed);
    rec.set_config(&json!({ "sizes": sizes, "models": specs, "test_fraction": a.test_fraction, "list": list }))?;
    let subsets = sweep_subsets(&list, &ds, &sizes)?;
    let report = retrain_compare(&ds, &subsets, &specs, a.seed, a.test_fraction)?;
    write_selection(&mut rec, &report)?;
    print!("{}", report.to_markdown());
    rec.finish()?;
    Ok(())
}

pub(crate) fn write_selection(rec: &mut Recorder, report: &ensemble_interp::SelectionReport) -> Result<()> {
    rec.write("selection.csv", report.to_csv())?;
    rec.write("selection.md", report.to_markdown())?;
    rec.write("selection.svg", report.to_svg())?;
    let d = report.dominance("ensemble", "correlation");
    rec.write_json(
        "dominance.json",
        &json!({ "ensemble_vs_correlation": d, "cells": d.cells(), "majority": d.majority() }),
    )
}
