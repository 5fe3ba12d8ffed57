use std::path::PathBuf;

use thiserror::Error;

use crate::report::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read config file {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("relation `{0}` is not connected to the join root by foreign keys")]
    Disconnected(String),

    #[error("table `{table}`: cannot open {path}: {source}")]
    MissingTable {
        table: String,
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("table `{table}`: missing column `{column}`")]
    MissingColumn { table: String, column: String },

    #[error("table `{table}` row {row}, column `{column}`: cannot parse timestamp `{value}`")]
    Timestamp {
        table: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("table `{table}`: duplicate primary key `{key}`")]
    DuplicateKey { table: String, key: String },

    #[error("table `{table}` row `{row}`: foreign key `{column}` = `{value}` does not exist in `{references}`")]
    DanglingReference {
        table: String,
        row: String,
        column: String,
        value: String,
        references: String,
    },

    #[error("{0}")]
    Validation(ValidationReport),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::ConfigFile { .. }
            | Error::Syntax { .. }
            | Error::UnknownRelation(_)
            | Error::Disconnected(_) => 2,
            Error::Validation(_) | Error::Invariant(_) => 3,
            Error::MissingTable { .. }
            | Error::MissingColumn { .. }
            | Error::Timestamp { .. }
            | Error::DuplicateKey { .. }
            | Error::DanglingReference { .. }
            | Error::Csv(_)
            | Error::Json(_) => 4,
            Error::Io(_) => 4,
        }
    }
}
