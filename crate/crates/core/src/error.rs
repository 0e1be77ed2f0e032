use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input function is outside the space an operator is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A derivative order beyond what an oracle can supply was requested.
    #[error("derivative of order {requested} requested but the oracle supports at most {max}")]
    Capability { requested: usize, max: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error: {0}")]
    Format(String),

    /// An oracle failed while sampling a grid.
    #[error("oracle evaluation failed at node {node} (t = {t}): {source}")]
    Node {
        node: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
