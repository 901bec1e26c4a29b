use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed rationale: {0}")]
    MalformedRationale(String),

    #[error("invalid rationale: {0}")]
    InvalidRationale(String),

    #[error("empty field: {0}")]
    EmptyField(&'static str),

    #[error("empty text cannot be embedded")]
    EmptyText,

    #[error("transport error: {0}")]
    Transport(String),

    #[error("document {document_id}: wanted {wanted} valid samples, got {got}")]
    InsufficientValidSamples {
        document_id: String,
        wanted: usize,
        got: usize,
    },

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity of a zero vector")]
    ZeroVector,

    #[error("document {document_id}: no candidate could be scored ({reasons})")]
    AllCandidatesFailed { document_id: String, reasons: String },

    #[error("document {0} has no golden rationale")]
    MissingRationale(String),

    #[error("decode failed: {0}")]
    DecodeFailure(String),

    #[error("stage order violation: {0}")]
    StageOrderViolation(String),

    #[error("reserved token {token:?} found in {context}")]
    ReservedToken { token: &'static str, context: String },

    #[error("empty input")]
    EmptyInput,

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("stage {stage} failed: {reason}")]
    StageFailed { stage: &'static str, reason: String },

    #[error("duplicate document id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),

    #[error("workspace is locked by {0}")]
    WorkspaceLocked(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
