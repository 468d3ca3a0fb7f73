use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ensemble_interp::listspace::{ListMode, RepairPolicy};

#[derive(Debug, Parser)]
#[command(name = "ensemble-interp", version, about = "Explain tabular classifiers and combine explanations into ranked feature lists")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on the training part of a split.
    Train(TrainArgs),
    /// Predict class probabilities for every row of a CSV.
    Predict(PredictArgs),
    /// Run an explainer and write attribution vectors and their lists.
    Explain(ExplainArgs),
    /// Aggregate interpretation lists by positional scoring.
    Ensemble(EnsembleArgs),
    /// Score interpretation lists against a reference label.
    Score(ScoreArgs),
    /// Compare ensemble and correlation feature selection by retraining.
    Select(SelectArgs),
    /// Run a full pipeline described by a JSON config file.
    Run(RunArgs),
    /// Regenerate a bundled experiment.
    Reproduce(ReproduceArgs),
    /// Replay a manifest into a new directory and verify the outputs bitwise.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Magnitude,
    Signed,
}

impl From<ModeArg> for ListMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Magnitude => ListMode::Magnitude,
            ModeArg::Signed => ListMode::Signed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepairArg {
    Strict,
    ReplaceSecondDuplicate,
}

impl From<RepairArg> for RepairPolicy {
    fn from(r: RepairArg) -> Self {
        match r {
            RepairArg::Strict => RepairPolicy::Strict,
            RepairArg::ReplaceSecondDuplicate => RepairPolicy::ReplaceSecondDuplicate,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the class column.
    #[arg(long)]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model spec `kind[:key=value,...]`, e.g. `random_forest:n_trees=200`.
    #[arg(long)]
    pub model: String,
    /// Split seed; also the model seed unless the spec sets one.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Held-out fraction; 0 trains on every row.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// lime, shap, shap_exact, pfi, pdp, ale, gam, gsm or fi.
    #[arg(long)]
    pub method: String,
    /// Row of `--data` to explain (local methods).
    #[arg(long)]
    pub instance: Option<usize>,
    /// Class name to explain; default: predicted class (local) or all classes (global).
    #[arg(long = "class")]
    pub class_name: Option<String>,
    /// Explainer parameter override `name=value`; repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of explainer runs with derived seeds.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Magnitude)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// List file; one list per line.
    #[arg(long, required_unless_present = "attributions")]
    pub lists: Option<PathBuf>,
    /// Attribution JSON files to turn into lists; repeatable.
    #[arg(long = "attribution")]
    pub attributions: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Magnitude)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = RepairArg::Strict)]
    pub repair_policy: RepairArg,
    /// Reference label to score the lists and the ensemble against.
    #[arg(long)]
    pub label: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// List file with one or more lists.
    #[arg(long)]
    pub list: PathBuf,
    /// Reference label file.
    #[arg(long)]
    pub label: PathBuf,
    #[arg(long, value_enum, default_value_t = RepairArg::Strict)]
    pub repair_policy: RepairArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// List file holding the ensemble list (the `ensemble` entry, else the first).
    #[arg(long)]
    pub lists: PathBuf,
    /// Subset sizes; `all` keeps every feature.
    #[arg(long, value_delimiter = ',', default_value = "3,5,8,all")]
    pub sizes: Vec<String>,
    /// Model kinds to retrain.
    #[arg(long, value_delimiter = ',', default_value = "logistic,gaussian_nb,decision_tree,random_forest,gbdt")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// RunConfig JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Wine: train, LIME ensemble, scores, stability and feature selection.
    Wine,
    /// Natural gas: aggregate and score the published lists.
    GasLists,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Ensemble size for the wine LIME ensemble.
    #[arg(long, default_value_t = 11)]
    pub m: usize,
    /// Repeats of the wine ensemble for the stability check.
    #[arg(long, default_value_t = 5)]
    pub meta_seeds: usize,
    #[arg(long, value_enum, default_value_t = RepairArg::ReplaceSecondDuplicate)]
    pub repair_policy: RepairArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
