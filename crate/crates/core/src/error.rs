use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A codec, signal, or experiment parameter is out of range.
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    /// A step was applied to a state that is not at that step.
    #[error("sequencing error: state expects step {expected}, got step {found}")]
    Sequencing { expected: usize, found: usize },

    #[error("time {t} outside [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("{0}")]
    EmptyDomain(String),

    #[error("no m <= {cap} satisfies the acquisition inequality")]
    Divergence { cap: usize },

    /// Malformed bitstream or data file. `line` is 1-based.
    #[error("format error at line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}
