use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty input")]
    EmptyFile,
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("class column `{0}` not found")]
    MissingClassColumn(String),
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    UnparseableCell { line: usize, column: String, value: String },
    #[error("line {line}, column `{column}`: missing value")]
    MissingValue { line: usize, column: String },
    #[error("attribute `{name}`: unsupported type `{kind}`")]
    UnknownAttributeType { name: String, kind: String },
    #[error("line {line}, attribute `{attribute}`: value `{value}` is outside the declared domain")]
    DomainViolation { line: usize, attribute: String, value: String },
    #[error("malformed ARFF: {0}")]
    Arff(String),

    #[error("attribute `{0}` is not numeric")]
    NotNumeric(String),
    #[error("attribute `{0}` is not nominal")]
    NotNominal(String),
    #[error("unknown attribute index {0}")]
    UnknownAttribute(usize),
    #[error("unknown synthetic dataset `{0}`")]
    UnknownDataset(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("schema mismatch: expected {expected} attributes, found {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("no class has at least {min_support} instances")]
    NoClassMeetsThreshold { min_support: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("continuous column must be discretised before MDL scoring")]
    ContinuousColumn,
    #[error("empty attribute subset")]
    EmptyAttributeSubset,
    #[error("feature `{0}` divides by zero on the training data")]
    DivideByZero(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidConfig(_) | Error::UnknownDataset(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }
}
