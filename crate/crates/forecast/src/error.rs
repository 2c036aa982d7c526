use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("series has {len} days, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("lag {lag} is shorter than the {horizon}-day horizon")]
    LeakingLag { lag: u32, horizon: u32 },

    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),

    #[error("no usable dates: every candidate row lacks some input")]
    EmptyUsableRange,

    #[error("need n >= 2k for blocked CV, got n={n}, k={k}")]
    TooFewRows { n: usize, k: usize },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("grid entry {index} does not match model kind {kind}")]
    GridKindMismatch { index: usize, kind: String },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("feature schema mismatch: expected {expected} columns, got {got}")]
    SchemaMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("no models to ensemble")]
    NoModels,

    #[error("invalid RMSE {0}")]
    InvalidRmse(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("need at least {needed} residuals, got {got}")]
    TooFewResiduals { got: usize, needed: usize },

    #[error("invalid bootstrap config: {0}")]
    InvalidBootstrap(String),

    #[error("interval dates misaligned at position {index}: {left} vs {right}")]
    MisalignedDates { index: usize, left: NaiveDate, right: NaiveDate },

    #[error("train/test split leaves an empty side at {0}")]
    EmptySplit(NaiveDate),

    #[error("artifact error: {0}")]
    Artifact(String),
}
