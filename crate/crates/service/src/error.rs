use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use forecast::ForecastError;
use sim_core::SimError;

/// One offending input location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    /// Dotted path into the request, `$` for the whole body.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub code: String,
    pub message: String,
    pub fields: Vec<FieldError>,
}

/// Error response: `{"error": {status, code, message, fields}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub fields: Vec<FieldError>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, path: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        ApiError {
            status,
            code,
            fields: vec![FieldError {
                path: path.to_string(),
                message: message.clone(),
            }],
            message,
        }
    }

    pub fn malformed(path: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", path, message)
    }

    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", path, message)
    }

    pub fn invalid_fields(fields: Vec<FieldError>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "validation_failed",
            message: fields
                .iter()
                .map(|f| format!("{}: {}", f.path, f.message))
                .collect::<Vec<_>>()
                .join("; "),
            fields,
        }
    }

    pub fn not_found(path: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", path, message)
    }

    pub fn conflict(path: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", path, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "$", message)
    }

    /// Maps a simulation error under the request prefix `prefix`.
    pub fn from_sim(err: &SimError, prefix: &str) -> Self {
        let path = match err {
            SimError::ParamDomain { field, .. } => join(prefix, field),
            SimError::StateCorruption { stage, .. } => join("initial", stage.name()),
            SimError::DuplicateRule(_) | SimError::InvalidThreshold { .. } => "rules".to_string(),
            SimError::UnknownParameter(_) => "param".to_string(),
            SimError::DayOutOfRange { .. } => "snapshot_day".to_string(),
            SimError::EmptyGrid => "grid".to_string(),
            SimError::TraceTooShort { .. } => join(prefix, "horizon"),
        };
        Self::invalid(&path, err.to_string())
    }

    pub fn from_forecast(err: &ForecastError) -> Self {
        let path = match err {
            ForecastError::SeriesTooShort { .. } | ForecastError::EmptySplit(_) => "arrivals",
            ForecastError::UnknownIndicator(_) => "config.features.indicators",
            ForecastError::LeakingLag { .. } => "config.features.target_lags",
            ForecastError::InvalidBootstrap(_) => "config.bootstrap",
            ForecastError::TooFewRows { .. } => "config.cv.folds",
            ForecastError::EmptyGrid
            | ForecastError::GridKindMismatch { .. }
            | ForecastError::InvalidHyperparameter(_)
            | ForecastError::NoModels => "config.models",
            _ => "$",
        };
        Self::invalid(path, err.to_string())
    }
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            status: self.status.as_u16(),
            code: self.code.to_string(),
            message: self.message,
            fields: self.fields,
        };
        (self.status, Json(serde_json::json!({ "error": body }))).into_response()
    }
}
