use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dpanova_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("line {line}: value outside the declared bounds")]
    OutOfBounds { line: u64 },
    #[error("line {line}: value is not a number")]
    BadValue { line: u64 },
    #[error("line {line}: unknown category `{label}`")]
    UnknownCategory { line: u64, label: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Distribution(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Stable identifier for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(dpanova_core::Error::InvalidParameter { .. }) => "invalid_parameter",
            Error::Core(dpanova_core::Error::DegenerateInput(_)) => "degenerate_input",
            Error::Core(_) => "invalid_data",
            Error::Csv(_) => "parse_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "serialization_error",
            Error::MissingColumn(_) => "missing_column",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::BadValue { .. } => "parse_error",
            Error::UnknownCategory { .. } => "unknown_category",
            Error::Usage(_) => "usage",
            Error::Distribution(_) => "invalid_parameter",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}
