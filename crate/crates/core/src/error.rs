use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite evaluation of `{label}` at x = {x:?}")]
    Evaluation { label: String, x: Vec<f64> },

    #[error("simulation diverged at t = {t}; last finite state {last_state:?}")]
    Divergence { t: f64, last_state: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
