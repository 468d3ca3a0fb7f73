use thiserror::Error;

use crate::data::DataError;
use crate::evaluation::EvalError;
use crate::explainers::ExplainError;
use crate::listspace::ListError;
use crate::model_zoo::ModelError;
use crate::selection::SelectionError;

/// Crate-wide error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    List(#[from] ListError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

impl Error {
    /// Short machine-readable category, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Data(_) => "data",
            Error::Model(_) => "model",
            Error::Explain(_) => "explain",
            Error::List(_) => "list",
            Error::Eval(_) => "evaluation",
            Error::Selection(_) => "selection",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
