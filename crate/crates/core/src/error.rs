use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("corruption matrix row {row} is invalid: {reason}")]
    InvalidMatrixRow { row: usize, reason: String },

    #[error("invalid corruption matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("noise level {0} is outside [0, 1]")]
    GammaOutOfRange(f64),

    #[error("invalid neighborhood: {0}")]
    InvalidNeighborhood(String),

    #[error("enumeration needs {strings} label strings, over the budget of {budget}")]
    BudgetExceeded { strings: u128, budget: u128 },

    #[error("label {label} at index {index} is outside [0, {num_labels})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_labels: usize,
    },

    #[error("invalid noise spec: {0}")]
    InvalidNoiseSpec(String),

    #[error("class {class} has {size} samples, fewer than the {clusters} clusters requested")]
    ClassTooSmall {
        class: usize,
        size: usize,
        clusters: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
