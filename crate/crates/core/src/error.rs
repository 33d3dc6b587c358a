use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    Shape { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("softmax: every position is masked")]
    InvalidMask,
    #[error("maxout: last dimension {0} is odd")]
    OddDimension(usize),
    #[error("input of {frames} frames is shorter than the total pool factor {required}")]
    TooShortInput { frames: usize, required: usize },
    #[error("attention window [{lo}, {hi}] is invalid for {len} encoder frames")]
    InvalidWindow { lo: usize, hi: usize, len: usize },
    #[error("label {label} is outside the vocabulary of size {vocab}")]
    LabelOutOfRange { label: usize, vocab: usize },
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("search finished without a surviving hypothesis")]
    EmptyBeam,
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("incompatible model import: {0}")]
    IncompatibleImport(String),
    #[error("utterance {0} consists only of silence")]
    AllSilence(String),
    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint checksum mismatch (stored {stored}, computed {computed})")]
    Checksum { stored: String, computed: String },
    #[error("malformed data file {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape { op, left: left.to_vec(), right: right.to_vec() }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }
}
