use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite parameter at position {0}")]
    NonFiniteParameter(usize),

    #[error("data error at row {row}, column `{column}`: {message}")]
    Data {
        /// 1-based data row (header excluded).
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank-deficient design; offending columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("outcome does not vary (all outcomes equal to {0})")]
    DegenerateOutcome(u8),

    #[error("candidate {candidate} has a zero index numerator; reparametrization undefined")]
    ZeroIndex { candidate: String },

    #[error("singular information matrix; near-null directions: {}", .0.join("; "))]
    SingularInformation(Vec<String>),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("empty subsample")]
    EmptySubsample,

    #[error("invalid counterfactual change: {0}")]
    InvalidChange(String),

    #[error("{0} clusters; at least 2 are required")]
    TooFewClusters(usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
