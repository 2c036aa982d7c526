use axum::body::Bytes;
use axum::extract::{FromRequest, Request};
use serde::de::DeserializeOwned;

use crate::ApiError;

/// JSON request body whose errors carry the offending field path.
///
/// Syntax and type errors are 400s; domain checks happen in the handlers.
pub struct JsonBody<T>(pub T);

pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let path = if path == "." || path == "?" { "$".to_string() } else { path };
        ApiError::malformed(&path, err.into_inner().to_string())
    })?;
    de.end().map_err(|e| ApiError::malformed("$", e.to_string()))?;
    Ok(value)
}

impl<S, T> FromRequest<S> for JsonBody<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::malformed("$", e.body_text()))?;
        parse_json(&bytes).map(JsonBody)
    }
}
