use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("solver: {0}")]
    Lp(#[from] ducap_lp::LpError),
    #[error("generator: {0}")]
    Generator(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
