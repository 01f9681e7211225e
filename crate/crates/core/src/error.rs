use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("element {0} is already selected")]
    AlreadySelected(usize),

    #[error("outcome {0} is not in the outcome alphabet")]
    UnknownOutcome(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("observations are inconsistent with every scenario")]
    Inconsistent,

    #[error("terminal state: at most one compatible hypothesis remains")]
    TerminalState,

    #[error("instance is not identifiable: hypotheses {0} and {1} cannot be separated deterministically")]
    NotIdentifiable(usize, usize),

    #[error("stopping criterion unreachable: no remaining test splits the compatible set")]
    StoppingUnreachable,

    #[error("enumeration infeasible: {what} needs {size} but the cap is {cap}")]
    Infeasible { what: String, size: u128, cap: u128 },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("aborted by user")]
    Aborted,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn infeasible(what: impl Into<String>, size: impl TryInto<u128>, cap: impl TryInto<u128>) -> Self {
        Error::Infeasible {
            what: what.into(),
            size: size.try_into().unwrap_or(u128::MAX),
            cap: cap.try_into().unwrap_or(u128::MAX),
        }
    }
}
