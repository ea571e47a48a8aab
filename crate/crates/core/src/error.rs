use alloc::string::String;

/// Errors produced by the grounding engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Declared shapes disagree with each other or with the data length.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A value-level invariant failed. `index` is the flat index of the first
    /// offending entry (or row) inside the named tensor.
    #[error("invariant violation in {tensor} at index {index}: {detail}")]
    InvariantViolation {
        tensor: &'static str,
        index: usize,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// The relevance map has no strictly positive cell.
    #[error("relevance map is all zero")]
    AllZeroMap,

    /// No cell reached the threshold (only possible with normalization off).
    #[error("no cell reaches threshold {0}")]
    EmptyForeground(f64),

    /// The description does not occur in the token text.
    #[error("description not found in token text")]
    NotFound,

    #[error("token offsets inconsistent at token {0}")]
    OffsetInconsistency(usize),

    #[error("no <box> tag found")]
    NoBoxFound,

    #[error("malformed box: {0}")]
    MalformedBox(String),

    #[error("duplicate prediction for sample {0:?}")]
    DuplicatePrediction(String),

    #[error("duplicate ground truth for sample {0:?}")]
    DuplicateGroundTruth(String),

    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("crop {ratio} degenerates on a {width}x{height} image")]
    DegenerateCrop {
        ratio: String,
        width: u32,
        height: u32,
    },

    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
