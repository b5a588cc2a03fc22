use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid trim: sample {sample} has {size} observations but trim is {trim}")]
    InvalidTrim { sample: usize, trim: usize, size: usize },

    #[error("exact engine capacity exceeded: n = {n} exceeds the cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("size mismatch: data has sizes {data:?} but the null distribution was simulated for {null:?}")]
    SizeMismatch { data: Vec<usize>, null: Vec<usize> },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("malformed cache file {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
