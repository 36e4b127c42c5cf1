use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    /// `row` is the 1-based data row (the header is not counted).
    #[error("validation error in row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("positivity violated for record {id}: weight denominator is 0 with an observed event")]
    Positivity { id: String },

    #[error("degenerate node: treatment has no variance")]
    DegenerateNode,

    #[error("degenerate neighborhood: kernel-weighted treatment variance is 0")]
    DegenerateNeighborhood,

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("design file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than by
    /// the estimation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Validation { .. } | Error::Config(_) | Error::Toml(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
