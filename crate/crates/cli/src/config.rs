//! File-driven pipeline: train, explain with a roster of methods, combine
//! and optionally score.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ensemble_interp::data::split;
use ensemble_interp::evaluation::{score_table, ReferenceLabel};
use ensemble_interp::explainers::ExplainerConfig;
use ensemble_interp::listspace::{aggregate_with_scores, to_list, ListMode, TieRule};
use ensemble_interp::model_zoo::{accuracy, train, Predictor};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::RunArgs;
use crate::commands::{list_file_text, list_name, load_dataset, parse_spec, run_seed};
use crate::failure;
use crate::manifest::Recorder;
use crate::reproduce::explain_frame;

/// One explainer of the roster, run `m` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub explainer: ExplainerConfig,
    /// Base seed; defaults to the global seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub target: String,
    /// Model spec string, e.g. `random_forest:n_trees=100`.
    pub model: String,
    pub roster: Vec<RosterEntry>,
    #[serde(default)]
    pub mode: ListMode,
    /// Runs per roster entry.
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Test-set row explained by local methods.
    #[serde(default)]
    pub instance: usize,
}

fn default_test_fraction() -> f64 {
    0.3
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| failure("config", format!("invalid run config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(failure("config", "roster is empty"));
        }
        if self.m == 0 {
            return Err(failure("config", "m must be at least 1"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(failure("config", format!("test_fraction {} outside (0, 1)", self.test_fraction)));
        }
        for p in std::iter::once(&self.data).chain(self.label.as_ref()) {
            if !p.exists() {
                return Err(failure("config", format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

pub fn run(a: &RunArgs, recorded: Vec<String>) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = RunConfig::from_json(&text)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    run_config(&cfg, &out, recorded, Some(&a.config))
}

pub fn run_config(cfg: &RunConfig, out: &Path, recorded: Vec<String>, config_path: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let mut rec = Recorder::new(out, recorded)?;
    if let Some(p) = config_path {
        rec.read_input(p)?;
    }
    rec.set_config(cfg)?;
    rec.seed("global", cfg.seed);
    let ds = load_dataset(&mut rec, &cfg.data, &cfg.target)?;
    let spec = parse_spec(&cfg.model, cfg.seed)?;
    let (tr, te) = split(&ds, cfg.test_fraction, cfg.seed)?;
    if cfg.instance >= te.n_samples() {
        return Err(failure("config", format!("instance {} out of range for {} test rows", cfg.instance, te.n_samples())));
    }
    let model = train(&tr, &spec)?;
    rec.write("model.json", model.to_json())?;
    rec.write_json("metrics.json", &json!({ "test_accuracy": accuracy(&model, &te)?, "train_size": tr.n_samples(), "test_size": te.n_samples() }))?;

    // Local methods explain one test row against the training data.
    let (explain_ds, instance_index) = explain_frame(&tr, &te, cfg.instance)?;

    let mut lists = Vec::new();
    for (e, entry) in cfg.roster.iter().enumerate() {
        let method = entry.explainer.method_id();
        let base = entry.seed.unwrap_or(cfg.seed);
        rec.seed(&format!("roster{e}_{method}"), base);
        let local = matches!(entry.explainer, ExplainerConfig::Lime { .. } | ExplainerConfig::Shap { .. } | ExplainerConfig::ShapExact);
        // Global methods use the training data alone.
        let (data, instance) = if local { (&explain_ds, Some(instance_index)) } else { (&tr, None) };
        for k in 0..cfg.m {
            let av = entry.explainer.run(&model, data, instance, run_seed(base, method, k, cfg.m), None)?;
            let name = list_name(method, k, cfg.m);
            rec.write(&format!("attributions/{name}.json"), av.to_json() + "\n")?;
            let mut list = to_list(&av, cfg.mode, TieRule::FeatureIndex)?;
            list.provenance = name;
            lists.push(list);
        }
    }
    let universe = model.feature_names().to_vec();
    rec.write("lists.list", list_file_text(&universe, &lists))?;
    let (ens, board) = aggregate_with_scores(&lists, &universe, TieRule::FeatureIndex)?;
    rec.write("ensemble.list", list_file_text(&universe, std::slice::from_ref(&ens)))?;
    rec.write("scoreboard.csv", board.to_csv())?;
    if let Some(path) = &cfg.label {
        let text = rec.read_input_string(path)?;
        let label = ReferenceLabel::parse(&text, &path.display().to_string())?;
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
