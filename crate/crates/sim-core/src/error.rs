use thiserror::Error;

use crate::StageId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A scenario parameter lies outside its domain.
    #[error("parameter `{field}` out of domain: {reason}")]
    ParamDomain { field: String, reason: String },

    /// A pool holds a negative or non-finite value.
    #[error("state corrupted: stage {stage} holds {value}")]
    StateCorruption { stage: StageId, value: f64 },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("trace too short: need at least {needed} states, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    #[error("day {day} out of range 0..={horizon}")]
    DayOutOfRange { day: u32, horizon: u32 },

    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),

    #[error("rule `{id}` has invalid threshold {threshold}")]
    InvalidThreshold { id: String, threshold: f64 },

    #[error("empty sweep grid")]
    EmptyGrid,
}

impl SimError {
    pub(crate) fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::ParamDomain {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Machine-readable field path for domain errors, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            SimError::ParamDomain { field, .. } => Some(field),
            _ => None,
        }
    }
}
