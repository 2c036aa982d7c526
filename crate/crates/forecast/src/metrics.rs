use serde::{Deserialize, Serialize};

use crate::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
}

/// Root mean squared and mean absolute error of `pred` against `truth`.
pub fn evaluate(pred: &[f64], truth: &[f64]) -> Result<Metrics, ForecastError> {
    if pred.len() != truth.len() {
        return Err(ForecastError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(ForecastError::EmptyInput);
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(ForecastError::DegenerateMatrix("non-finite value in evaluation".into()));
    }
    let n = pred.len() as f64;
    let (sq, abs) = pred.iter().zip(truth).fold((0.0, 0.0), |(sq, abs), (p, t)| {
        let e = p - t;
        (sq + e * e, abs + e.abs())
    });
    let mae = abs / n;
    // The power-mean inequality holds exactly; rounding may not.
    let rmse = (sq / n).sqrt().max(mae);
    Ok(Metrics { rmse, mae })
}
