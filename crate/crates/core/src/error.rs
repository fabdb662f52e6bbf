use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum DfiError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("target column not found: {0}")]
    TargetNotFound(String),

    #[error("invalid cell at row {row}, column \"{column}\": {value:?}")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("zero-variance column \"{0}\" cannot be standardized")]
    ZeroVariance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular or near-singular covariance: eigenvalue {eigenvalue:e} <= floor {floor:e}; dependent block: [{}]", .block.join(", "))]
    SingularCovariance {
        eigenvalue: f64,
        floor: f64,
        block: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    #[error("{0}")]
    Unavailable(String),
}

pub type Result<T> = std::result::Result<T, DfiError>;

impl DfiError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DfiError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Converts a serde_json error into a byte-offset diagnostic against `text`.
    pub(crate) fn json(text: &str, err: serde_json::Error) -> Self {
        let offset = byte_offset(text, err.line(), err.column());
        DfiError::Json {
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
