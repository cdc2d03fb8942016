use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed statement ({reason})")]
    MalformedLine { line: usize, reason: String },

    #[error("no triple in the document mentions entity <{entity}>")]
    EmptyDescription { entity: String },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("fold {index} is invalid: {reason}")]
    InvalidFold { index: usize, reason: String },

    #[error("gold summary {file} for <{entity}> references a statement not in the description (line {line})")]
    GoldNotSubset {
        entity: String,
        file: String,
        line: usize,
    },

    #[error("gold summary {file} for <{entity}> has {size} triples, more than k={k}")]
    GoldTooLarge {
        entity: String,
        file: String,
        k: usize,
        size: usize,
    },

    #[error("entity <{entity}> has no gold summaries for k={k}")]
    NoGoldForK { entity: String, k: usize },

    #[error("unknown entity <{0}>")]
    UnknownEntity(String),

    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: cannot parse vector ({reason})")]
    VecParse { line: usize, reason: String },

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("summary is empty")]
    EmptySummary,

    #[error("non-finite loss {loss} on <{entity}> in epoch {epoch}")]
    NonFiniteLoss {
        entity: String,
        epoch: usize,
        loss: f64,
    },

    #[error("samples have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("paired differences have zero variance and non-zero mean")]
    DegenerateVariance,

    #[error("fold {index}: {source}")]
    Fold {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// The innermost error, looking through fold wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}
