use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree: cannot build a {d}-regular graph on {n} nodes ({reason})")]
    InvalidDegree { n: usize, d: usize, reason: &'static str },

    #[error("regular graph sampler gave up after {attempts} restarts (n = {n}, d = {d})")]
    SamplerExhausted { n: usize, d: usize, attempts: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("value {value} at index {index} is outside [0, 1]")]
    Domain { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("instance has {n} variables; exhaustive search is capped at {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("incomplete result grid: {0}")]
    IncompleteGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
