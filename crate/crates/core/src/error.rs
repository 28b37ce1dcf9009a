use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("empty series: no non-missing values")]
    EmptySeries,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("no model could be fitted: {0}")]
    NoModel(String),

    #[error("degenerate column '{column}': zero variance under standardization")]
    DegenerateColumn { column: String },

    #[error("collinear design: dependent columns {columns:?}")]
    Collinearity { columns: Vec<String> },

    #[error("covariate '{label}' has no value at time {time} (offset {offset})")]
    Coverage { label: String, time: i64, offset: i64 },

    #[error("parse error in {file} at row {row}, column {column}: {message}")]
    Parse {
        file: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
