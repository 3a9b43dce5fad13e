use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("duplicate pair id `{0}`")]
    DuplicateId(String),

    #[error("missing field `{name}` at line {line}")]
    MissingField { name: String, line: usize },

    #[error("negative count `{field}` for pair `{pair_id}`")]
    NegativeCount { pair_id: String, field: String },

    #[error("inconsistent counts for pair `{pair_id}`: {reason}")]
    CountInconsistent { pair_id: String, reason: String },

    #[error("unknown pair id `{0}`")]
    UnknownPair(String),

    #[error("invalid span for pair `{pair_id}`: {reason}")]
    InvalidSpan { pair_id: String, reason: String },

    #[error("non-finite value for pair `{0}`")]
    NaNValue(String),

    #[error("invalid window: overlap {overlap} must be smaller than max_len {max_len}")]
    InvalidWindow { max_len: usize, overlap: usize },

    #[error("n-gram order must be at least 1, got {0}")]
    InvalidN(usize),

    #[error("embedding header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("dimension mismatch at line {line}: expected {expected}, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("zero vector for `{0}`")]
    ZeroVector(String),

    #[error("token list mismatch for {pair_id}/{side}")]
    TokenMismatch { pair_id: String, side: String },

    #[error("embedding provider: {0}")]
    Provider(String),

    #[error("empty document")]
    EmptyDocument,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("undefined score: {0}")]
    UndefinedScore(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty target sequence")]
    EmptyTarget,

    #[error("no stored record for pair `{pair_id}` ({what})")]
    MissingPair { pair_id: String, what: String },

    #[error("empty text: {0}")]
    EmptyText(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ensemble member `{0}` not found in score table")]
    MissingMember(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("insufficient annotators: {0}")]
    InsufficientAnnotators(String),

    #[error("unknown reference criterion `{0}`")]
    UnknownCriterion(String),

    #[error("reports share no metric rows")]
    NoSharedMetrics,

    #[error("lexicon: {0}")]
    Lexicon(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}
