use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{predict, FeatureRows, ForecastError, TrainedModel};

pub const MIN_RESIDUALS: usize = 10;
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            level: 0.8,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.replicates < MIN_REPLICATES {
            return Err(ForecastError::InvalidBootstrap(format!(
                "replicates must be >= {MIN_REPLICATES}, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(ForecastError::InvalidBootstrap(format!(
                "level must be in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// Point forecast and interval per target date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    pub dates: Vec<NaiveDate>,
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Linear-interpolation sample quantile of sorted data (Hyndman-Fan type 7).
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resamples `residuals` around each point for `replicates` draws.
///
/// The band is clamped so that `0 <= lower <= point <= upper`.
pub(crate) fn resample_band(
    points: &[f64],
    residuals: &[f64],
    replicates: usize,
    level: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = vec![Vec::with_capacity(replicates); points.len()];
    for _ in 0..replicates {
        for (j, p) in points.iter().enumerate() {
            draws[j].push(p + residuals[rng.random_range(0..residuals.len())]);
        }
    }
    let alpha = (1.0 - level) / 2.0;
    let mut lower = Vec::with_capacity(points.len());
    let mut upper = Vec::with_capacity(points.len());
    for (mut d, p) in draws.into_iter().zip(points) {
        d.sort_by(f64::total_cmp);
        lower.push(empirical_quantile(&d, alpha).min(*p).max(0.0));
        upper.push(empirical_quantile(&d, 1.0 - alpha).max(*p));
    }
    (lower, upper)
}

/// Residual-bootstrap prediction interval for each row.
///
/// Residuals are the model's in-sample errors on the data it was fitted to.
pub fn bootstrap_intervals(
    model: &TrainedModel,
    rows: &FeatureRows,
    cfg: &BootstrapConfig,
) -> Result<PredictionBand, ForecastError> {
    cfg.validate()?;
    if model.residuals.len() < MIN_RESIDUALS {
        return Err(ForecastError::TooFewResiduals {
            got: model.residuals.len(),
            needed: MIN_RESIDUALS,
        });
    }
    let point = predict(model, rows)?;
    let (lower, upper) = resample_band(&point, &model.residuals, cfg.replicates, cfg.level, cfg.seed);
    Ok(PredictionBand {
        dates: rows.target_dates(),
        level: cfg.level,
        point,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{baseline_historical_mean, FeatureMatrix};

    #[test]
    fn type7_quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(empirical_quantile(&x, 0.0), 1.0);
        assert_eq!(empirical_quantile(&x, 0.5), 3.0);
        assert_eq!(empirical_quantile(&x, 1.0), 5.0);
        assert!((empirical_quantile(&x, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(empirical_quantile(&[7.0], 0.3), 7.0);
    }

    /// Every equally likely resample of `n` residuals for two dates, enumerated.
    fn exhaustive_band(points: &[f64; 2], residuals: &[f64], level: f64) -> [(f64, f64); 2] {
        let n = residuals.len();
        let alpha = (1.0 - level) / 2.0;
        let mut out = [(0.0, 0.0); 2];
        for (j, p) in points.iter().enumerate() {
            let mut all = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    let r = if j == 0 { residuals[a] } else { residuals[b] };
                    all.push(p + r);
                }
            }
            all.sort_by(f64::total_cmp);
            out[j] = (
                empirical_quantile(&all, alpha).min(*p).max(0.0),
                empirical_quantile(&all, 1.0 - alpha).max(*p),
            );
        }
        out
    }

    #[test]
    fn symmetric_residuals_match_exhaustive_resampling() {
        let residuals = [-1.0, 1.0, -1.0, 1.0, 1.0];
        let points = [10.0, 3.0];
        let oracle = exhaustive_band(&points, &residuals, 0.8);
        let (lower, upper) = resample_band(&points, &residuals, 5000, 0.8, 11);
        for j in 0..2 {
            assert_eq!((lower[j], upper[j]), oracle[j]);
            assert_eq!((lower[j], upper[j]), (points[j] - 1.0, points[j] + 1.0));
        }
    }

    fn constant_model(n: usize, residual: impl Fn(usize) -> f64) -> (TrainedModel, FeatureMatrix) {
        let y: Vec<f64> = (0..n).map(|i| 50.0 + residual(i)).collect();
        let m = FeatureMatrix::from_xy(vec![vec![0.0]; n], y);
        (baseline_historical_mean(&m).unwrap(), m)
    }

    #[test]
    fn ten_symmetric_residuals_give_unit_band() {
        let (model, m) = constant_model(10, |i| if i % 2 == 0 { -1.0 } else { 1.0 });
        let band = bootstrap_intervals(&model, &m.rows(), &BootstrapConfig::default()).unwrap();
        for i in 0..band.dates.len() {
            assert_eq!(band.point[i], 50.0);
            assert_eq!((band.lower[i], band.upper[i]), (49.0, 51.0));
        }
    }

    #[test]
    fn perfect_fit_collapses() {
        let (model, m) = constant_model(12, |_| 0.0);
        let band = bootstrap_intervals(&model, &m.rows(), &BootstrapConfig::default()).unwrap();
        assert_eq!(band.lower, band.point);
        assert_eq!(band.upper, band.point);
    }

    #[test]
    fn seeded_and_clipped() {
        let (model, m) = constant_model(30, |i| (i as f64 * 1.7).sin() * 80.0);
        let cfg = BootstrapConfig { seed: 3, ..Default::default() };
        let a = bootstrap_intervals(&model, &m.rows(), &cfg).unwrap();
        let b = bootstrap_intervals(&model, &m.rows(), &cfg).unwrap();
        assert_eq!(a, b);
        for i in 0..a.dates.len() {
            assert!(a.lower[i] >= 0.0);
            assert!(a.lower[i] <= a.point[i] && a.point[i] <= a.upper[i]);
        }
    }

    #[test]
    fn preconditions() {
        let (model, m) = constant_model(9, |i| i as f64);
        assert_eq!(
            bootstrap_intervals(&model, &m.rows(), &BootstrapConfig::default()).unwrap_err(),
            ForecastError::TooFewResiduals { got: 9, needed: 10 }
        );
        let (model, m) = constant_model(10, |i| i as f64);
        for cfg in [
            BootstrapConfig { replicates: 99, ..Default::default() },
            BootstrapConfig { level: 1.0, ..Default::default() },
            BootstrapConfig { level: 0.0, ..Default::default() },
        ] {
            assert!(matches!(
                bootstrap_intervals(&model, &m.rows(), &cfg),
                Err(ForecastError::InvalidBootstrap(_))
            ));
        }
    }
}
