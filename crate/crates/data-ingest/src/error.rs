use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{column}` in {context}")]
    MissingColumn { column: String, context: String },

    #[error("source `{0}` has no accepted rows")]
    NoAcceptedRows(String),

    #[error("source `{0}` has no records to align")]
    EmptyRecords(String),

    #[error("invalid date range {start}..={end}")]
    InvalidRange { start: chrono::NaiveDate, end: chrono::NaiveDate },

    #[error("series have no dates in common")]
    EmptyIntersection,

    #[error("no series given")]
    NoSeries,

    #[error("duplicate source id `{0}`")]
    DuplicateSource(String),

    #[error("bad source registry: {0}")]
    Registry(String),

    #[error("malformed panel file: {0}")]
    Panel(String),
}
