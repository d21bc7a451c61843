use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("universe mismatch: expected length {expected}, found {found}")]
    UniverseMismatch { expected: usize, found: usize },

    #[error("atom id {id} out of range for universe of {n} atoms")]
    AtomOutOfRange { id: usize, n: usize },

    #[error("invalid rule universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("rule does not fit cohort schema: {0}")]
    SchemaMismatch(String),

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: line {line}: unknown level `{level}` for field `{field}`")]
    UnknownLevel {
        path: PathBuf,
        line: u64,
        field: String,
        level: String,
    },

    #[error("{path}: line {line}: biomarker must be strictly positive, got {value}")]
    NonPositiveBiomarker { path: PathBuf, line: u64, value: f64 },

    #[error("{path}: line {line}: {message}")]
    BadValue { path: PathBuf, line: u64, message: String },

    #[error("cohort has no healthy-volunteer records")]
    EmptyHv,

    #[error("cohort has no non-healthy-volunteer records")]
    EmptySubjects,

    #[error("planted rule could not reach {required} matching records after {attempts} attempts")]
    InfeasiblePlant { required: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Gaussian process covariance is ill-conditioned (jitter reached {jitter:e})")]
    IllConditioned { jitter: f64 },

    #[error("exhaustive search refused: universe has {n} atoms, cap is {cap}")]
    ExhaustiveCap { n: usize, cap: usize },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("hash mismatch: {0}")]
    HashMismatch(String),

    #[error("refusing to overwrite {0} without --force")]
    WouldOverwrite(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad input data rather than bad configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn { .. }
                | Error::UnknownLevel { .. }
                | Error::NonPositiveBiomarker { .. }
                | Error::BadValue { .. }
                | Error::EmptyHv
                | Error::EmptySubjects
                | Error::HashMismatch(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Parse { .. }
                | Error::SchemaMismatch(_)
                | Error::InvalidUniverse(_)
                | Error::InfeasiblePlant { .. }
        )
    }
}
