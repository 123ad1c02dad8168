use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("unknown word: {0:?}")]
    UnknownWord(String),

    #[error("invalid resample target {0}: target must be at least 1")]
    InvalidTarget(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity is undefined for a zero vector{}", .word.as_ref().map(|w| format!(" (word {w:?})")).unwrap_or_default())]
    UndefinedSimilarity { word: Option<String> },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("duplicate word {word:?} at {location}")]
    DuplicateWord { word: String, location: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("embedding rows do not line up with the vocabulary: {0}")]
    VocabMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
