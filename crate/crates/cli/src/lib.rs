//! Command-line front end for training, explaining, ensembling, scoring and
//! feature selection, with a manifest written for every run.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod reproduce;

use std::fmt;
use std::path::Path;

use anyhow::Result;
use clap::Parser;

pub use args::{Cli, Command};

/// An error with a machine-readable kind.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn failure(kind: &'static str, message: impl Into<String>) -> anyhow::Error {
    Failure { kind, message: message.into() }.into()
}

/// Kind of the first recognised error in the chain.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    use ensemble_interp::{data, evaluation, explainers, listspace, model_zoo, selection};
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.kind;
        }
        if let Some(e) = cause.downcast_ref::<ensemble_interp::Error>() {
            return e.kind();
        }
        if cause.is::<data::DataError>() {
            return "data";
        }
        if cause.is::<model_zoo::ModelError>() {
            return "model";
        }
        if cause.is::<explainers::ExplainError>() {
            return "explain";
        }
        if cause.is::<listspace::ListError>() {
            return "list";
        }
        if cause.is::<evaluation::EvalError>() {
            return "evaluation";
        }
        if cause.is::<selection::SelectionError>() {
            return "selection";
        }
        if cause.is::<serde_json::Error>() {
            return "format";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "internal"
}

/// `{"error": {"kind": ..., "message": ...}}`
pub fn error_json(err: &anyhow::Error) -> String {
    let message = err.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ");
    serde_json::json!({ "error": { "kind": error_kind(err), "message": message } }).to_string()
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_from<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            failure("help", "")
        }
        _ => failure("usage", e.to_string().trim().to_string()),
    })?;
    run(cli, recorded_argv(&argv))
}

/// Arguments after the program name with `--out` and its value removed.
fn recorded_argv(argv: &[std::ffi::OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = args.next() {
        if a == "--out" {
            args.next();
        } else if !a.starts_with("--out=") {
            out.push(a);
        }
    }
    out
}

pub fn run(cli: Cli, recorded: Vec<String>) -> Result<()> {
    match cli.command {
        Command::Train(a) => commands::train(&a, recorded),
        Command::Predict(a) => commands::predict(&a, recorded),
        Command::Explain(a) => commands::explain(&a, recorded),
        Command::Ensemble(a) => commands::ensemble(&a, recorded),
        Command::Score(a) => commands::score(&a, recorded),
        Command::Select(a) => commands::select(&a, recorded),
        Command::Run(a) => config::run(&a, recorded),
        Command::Reproduce(a) => reproduce::reproduce(&a, recorded),
        Command::Rerun(a) => rerun(&a.manifest, &a.out),
    }
}

/// Replays a manifest into `out` and checks every output bitwise.
pub fn rerun(manifest_path: &Path, out: &Path) -> Result<()> {
    let m = manifest::Manifest::load(manifest_path)?;
    let changed = manifest::verify_inputs(&m);
    if !changed.is_empty() {
        return Err(failure("verification", format!("inputs changed since the manifest was written: {}", changed.join(", "))));
    }
    let mut argv = vec!["ensemble-interp".to_string()];
    argv.extend(m.command.iter().cloned());
    argv.push("--out".into());
    argv.push(out.display().to_string());
    run_from(argv)?;
    let mismatched = manifest::verify_outputs(&m, out);
    let fresh = manifest::Manifest::load(&out.join(manifest::MANIFEST_FILE))?;
    if !mismatched.is_empty() || fresh != m {
        return Err(failure("verification", format!("outputs differ from the manifest: {}", mismatched.join(", "))));
    }
    println!("reproduced {} output files bitwise", m.outputs.len());
    Ok(())
}
