use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("pre-epoch message: {timestamp} is before {epoch}")]
    PreEpoch { timestamp: String, epoch: String },

    #[error("invalid epoch {0:?}: expected YYYY-MM")]
    InvalidEpoch(String),

    #[error("invalid pattern in rule {rule} ({pattern:?}): {source}")]
    InvalidPattern {
        rule: usize,
        pattern: String,
        #[source]
        source: regex::Error,
    },

    #[error("unmapped concept {0}")]
    UnmappedConcept(String),

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("coded unit references unknown message {0:?}")]
    UnknownMessage(String),

    #[error("degenerate graph: order {n} is below the minimum of {min}")]
    DegenerateGraph { n: usize, min: usize },

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("node set of stratum {stratum} does not match the first network")]
    MismatchedNodes { stratum: String },

    #[error("matrix is not symmetric (|a_ij - a_ji| = {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("requested {k} eigenvalues but only {p} exist")]
    ScreeOutOfRange { k: usize, p: usize },

    #[error("linear predictor overflow")]
    Overflow,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero standard error for coefficient {0}")]
    ZeroStandardError(String),

    #[error("message {message_id} falls in month {month}, outside network range {first}..={last}")]
    MonthOutOfRange {
        message_id: String,
        month: u32,
        first: u32,
        last: u32,
    },

    #[error("missing {path}: run `{stage}` first")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
