use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input record. `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("AUC undefined for category {category}: needs at least one positive and one negative (got {n_pos} positive, {n_neg} negative)")]
    UndefinedMetric {
        category: String,
        n_pos: usize,
        n_neg: usize,
    },

    #[error("non-finite score {score} for sample {key}")]
    NonFiniteScore { key: String, score: f64 },

    #[error("imported scores are missing {missing} sample(s); first keys: {}", first.join(", "))]
    MissingScores { missing: usize, first: Vec<String> },

    #[error("bad graph cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Ingest { .. } => "ingest",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::UndefinedMetric { .. } => "undefined_metric",
            Error::NonFiniteScore { .. } => "non_finite_score",
            Error::MissingScores { .. } => "missing_scores",
            Error::Cache(_) => "cache",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
