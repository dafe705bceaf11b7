use thiserror::Error;

use crate::ltlf::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid play: {0}")]
    InvalidPlay(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("formula uses undeclared proposition `{0}`")]
    UndeclaredProposition(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("incomplete automaton: {0}")]
    IncompleteDfa(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("policy does not match product: {0}")]
    PolicyMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
