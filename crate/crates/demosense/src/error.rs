//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    DatasetRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("label space: {0}")]
    LabelSpace(String),

    #[error("verbalizer: {0}")]
    Verbalizer(String),

    #[error("split {split:?} of dataset {dataset:?} is empty")]
    EmptySplit { dataset: String, split: String },

    #[error("requested {requested} examples, split has {available}")]
    InsufficientExamples { requested: usize, available: usize },

    #[error("class {class:?} has {available} training examples, balanced draw needs {needed}")]
    InsufficientClassExamples {
        class: String,
        available: usize,
        needed: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("alpha must be in 0..=100, got {0}")]
    AlphaOutOfRange(u8),

    #[error("cannot corrupt labels: label space has a single class")]
    CannotCorrupt,

    #[error("label shuffle needs at least 2 demonstrations, got {0}")]
    TooFewForShuffle(usize),

    #[error("alphabet renaming covers at most 26 classes, got {0}")]
    AlphabetExhausted(usize),

    #[error("token pool has {available} distinct tokens, renaming needs {needed}")]
    PoolTooSmall { available: usize, needed: usize },

    #[error("template: {0}")]
    Template(String),

    #[error("dataset {dataset:?} defines no {tier} template")]
    MissingTemplate { dataset: String, tier: String },

    #[error("prompt grammar: {0}")]
    Grammar(String),

    #[error("mock model: {0}")]
    MockModel(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("content-free probability for label index {label} is zero; cannot calibrate")]
    DegenerateCalibration { label: usize },

    #[error("scores are already calibrated")]
    AlreadyCalibrated,

    #[error("regression needs at least 2 distinct x values")]
    DegenerateDesign,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label index {index} out of range for {classes} classes")]
    LabelIndexOutOfRange { index: usize, classes: usize },

    #[error("records file {path}: line {line} is not a valid record: {message}")]
    BadRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("synthetic spec: {0}")]
    SyntheticSpec(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
