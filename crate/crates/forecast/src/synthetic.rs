//! Synthetic arrivals and indicators with a planted 30-day-ahead signal.
//!
//! Daily arrivals are level + linear trend + weekly cycle + a multiple of a
//! leading indicator observed 30 days earlier + AR(1) noise. The leading
//! indicator is itself a persistent AR(1) process; a second indicator is
//! unrelated noise.

use chrono::{Datelike, Days, NaiveDate};
use data_ingest::IndicatorSeries;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{DailySeries, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// First row date of the held-out period.
    pub test_start: NaiveDate,
    pub level: f64,
    pub trend_per_day: f64,
    pub weekly_amplitude: f64,
    /// Arrivals per unit of the leading indicator, 30 days on.
    pub signal_beta: f64,
    pub signal_lead_days: u32,
    pub indicator_ar: f64,
    /// Innovation standard deviation of the indicator AR(1).
    pub indicator_sd: f64,
    pub noise_ar: f64,
    /// Innovation standard deviation of the arrivals noise AR(1).
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
        RegimeConfig {
            start: d(2021, 6, 6),
            end: d(2022, 5, 24),
            test_start: d(2022, 2, 1),
            level: 400.0,
            trend_per_day: 0.15,
            weekly_amplitude: 60.0,
            signal_beta: 60.0,
            signal_lead_days: 30,
            indicator_ar: 0.9,
            indicator_sd: 0.436,
            noise_ar: 0.5,
            noise_sd: 15.0,
            seed: 2022,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRegime {
    pub arrivals: DailySeries,
    pub indicators: Vec<IndicatorSeries>,
    pub test_start: NaiveDate,
}

fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let innov = Normal::new(0.0, sd).expect("sd >= 0");
    let stationary = Normal::new(0.0, sd / (1.0 - phi * phi).sqrt()).expect("|phi| < 1");
    let mut out = Vec::with_capacity(n);
    let mut x = stationary.sample(rng);
    for _ in 0..n {
        out.push(x);
        x = phi * x + innov.sample(rng);
    }
    out
}

impl SyntheticRegime {
    /// Pipeline settings matched to the regime: default registry, plus a
    /// 7-day trailing mean of each indicator.
    pub fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(self.test_start);
        cfg.features.indicator_ma_window = Some(7);
        cfg.seed = seed;
        cfg.bootstrap.seed = seed;
        cfg
    }
}

/// Generates one regime; identical configs give identical data.
pub fn generate(cfg: &RegimeConfig) -> SyntheticRegime {
    let n = (cfg.end - cfg.start).num_days() as usize + 1;
    let lead = cfg.signal_lead_days as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // The leading indicator starts `lead` days early so every arrival day has a driver.
    let leading: Vec<f64> = ar1(&mut rng, n + lead, cfg.indicator_ar, cfg.indicator_sd)
        .into_iter()
        .map(|z| 10.0 + z)
        .collect();
    let unrelated: Vec<f64> = ar1(&mut rng, n, cfg.indicator_ar, cfg.indicator_sd)
        .into_iter()
        .map(|z| 5.0 + z)
        .collect();
    let noise = ar1(&mut rng, n, cfg.noise_ar, cfg.noise_sd);

    let arrivals: Vec<f64> = (0..n)
        .map(|t| {
            let date = cfg.start + Days::new(t as u64);
            let dow = date.weekday().num_days_from_monday() as f64;
            let weekly = cfg.weekly_amplitude * (2.0 * std::f64::consts::PI * dow / 7.0).sin();
            let signal = cfg.signal_beta * (leading[t] - 10.0);
            (cfg.level + cfg.trend_per_day * t as f64 + weekly + signal + noise[t]).max(0.0)
        })
        .collect();

    SyntheticRegime {
        arrivals: DailySeries::new("arrivals", cfg.start, arrivals),
        indicators: vec![
            IndicatorSeries::observed("leading", cfg.start, leading[lead..].to_vec()),
            IndicatorSeries::observed("unrelated", cfg.start, unrelated),
        ],
        test_start: cfg.test_start,
    }
}

/// Linear-Gaussian data: `y = intercept + slope * x + N(0, sd)`, `x ~ U(0, 10)`.
pub fn linear_gaussian(n: usize, intercept: f64, slope: f64, sd: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).expect("sd >= 0");
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let y = x.iter().map(|xi| intercept + slope * xi + noise.sample(&mut rng)).collect();
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_regime_shape() {
        let r = generate(&RegimeConfig::default());
        assert_eq!(r.arrivals.len(), 353);
        assert_eq!(r.arrivals.end().unwrap(), NaiveDate::from_ymd_opt(2022, 5, 24).unwrap());
        for s in &r.indicators {
            assert_eq!(s.values.len(), 353);
            assert_eq!(s.range.start, r.arrivals.start);
        }
        assert!(r.arrivals.values.iter().all(|v| v.unwrap() >= 0.0));
        assert_eq!(generate(&RegimeConfig::default()), r);
    }
}
