use serde::{Deserialize, Serialize};

/// Display-scaled values in `[0, 1]`; missing entries stay missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    pub values: Vec<Option<f64>>,
    /// Set when fewer than two distinct values were present; every value is then 0.5.
    pub degenerate: bool,
}

/// Min-max scaling over the present values. Affine and order-preserving.
pub fn normalize_for_display(values: &[Option<f64>]) -> NormalizedSeries {
    let (lo, hi) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    if !(hi > lo) {
        return NormalizedSeries {
            values: values.iter().map(|v| v.map(|_| 0.5)).collect(),
            degenerate: true,
        };
    }
    let span = hi - lo;
    NormalizedSeries {
        values: values
            .iter()
            .map(|v| v.map(|x| ((x - lo) / span).clamp(0.0, 1.0)))
            .collect(),
        degenerate: false,
    }
}
