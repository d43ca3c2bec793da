use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains the reserved special character U+0000 at offset {offset}")]
    ContainsSpecial { offset: usize },

    #[error("sentence of length {len} exceeds the maximum of {max} characters")]
    TooLong { len: usize, max: usize },

    #[error("expanded index {index} is outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("edit ball enumeration exceeded the candidate budget of {limit}")]
    BudgetExceeded { limit: usize },

    #[error("ball size bound overflows u128")]
    Overflow,

    #[error("alphabet must not contain the special character")]
    SpecialInAlphabet,

    #[error("label {label} is invalid for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("invalid class scores: {0}")]
    InvalidScores(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training dataset is empty")]
    EmptyDataset,

    #[error("label {label} does not fit the configured {classes} classes")]
    InconsistentClasses { label: usize, classes: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("transport failure talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },

    #[error("remote oracle returned HTTP {status}: {body}")]
    Status { status: u16, body: String },

    #[error("remote oracle response violates the schema ({detail}): {payload}")]
    Schema { detail: String, payload: String },

    #[error("gradients are not available for a {0} oracle")]
    GradientUnavailable(&'static str),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dataset is missing required column `{0}`")]
    MissingColumn(String),

    #[error("unknown dataset format `{0}`")]
    UnknownFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
