//! HTTP API and command-line front end.
//!
//! Simulation and sensitivity endpoints are pure functions of the request.
//! Scenarios and runs persist to a single JSON file under the data
//! directory; the latest trained ensemble and the ingested indicator panel
//! are kept beside it and served as lock-free snapshots.

pub mod api;
pub mod cli;
pub mod config;
mod error;
mod json;
pub mod ops;
pub mod scenario;
pub mod store;

pub use api::{router, AppState};
pub use error::{ApiError, ErrorBody, FieldError};
pub use json::{parse_json, JsonBody};
