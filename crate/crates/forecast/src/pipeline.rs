//! Train/test evaluation, ensembling, and the exported forecast table.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use data_ingest::IndicatorSeries;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    baseline_historical_mean, bootstrap_intervals, build_features, build_future_rows, ensemble_intervals,
    ensemble_weights, evaluate, fit_model, predict, refit, BootstrapConfig, CvConfig, DailySeries,
    FeatureRows, FeatureSpec, ForecastError, Hyperparams, Metrics, ModelKind, ModelSpec, TrainedModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// First row date of the held-out test period.
    pub test_start: NaiveDate,
    #[serde(default)]
    pub features: FeatureSpec,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "ModelSpec::default_registry")]
    pub models: Vec<ModelSpec>,
}

impl PipelineConfig {
    pub fn new(test_start: NaiveDate) -> Self {
        PipelineConfig {
            test_start,
            features: FeatureSpec::default(),
            cv: CvConfig::default(),
            bootstrap: BootstrapConfig::default(),
            seed: 0,
            models: ModelSpec::default_registry(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub cv_mse: Option<f64>,
    pub test_rmse: f64,
    pub test_mae: f64,
    /// Ensemble weight; `None` for the baseline.
    pub weight: Option<f64>,
}

/// One target date of the exported forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub truth: Option<f64>,
    pub predictions: BTreeMap<String, f64>,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleForecast {
    pub level: f64,
    pub weights: BTreeMap<String, f64>,
    pub rows: Vec<ForecastRow>,
}

fn fmt_num(v: f64) -> String {
    serde_json::to_string(&v).expect("finite number")
}

impl EnsembleForecast {
    pub fn model_names(&self) -> Vec<String> {
        self.weights.keys().cloned().collect()
    }

    /// Checks weights and per-row interval ordering.
    pub fn validate(&self) -> Result<(), ForecastError> {
        let sum: f64 = self.weights.values().sum();
        if self.weights.values().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(ForecastError::InvalidWeights(format!("weights sum to {sum}")));
        }
        for row in &self.rows {
            if !(row.lower <= row.point && row.point <= row.upper) {
                return Err(ForecastError::InvalidBootstrap(format!(
                    "interval ({}, {}) excludes point {} on {}",
                    row.lower, row.upper, row.point, row.date
                )));
            }
        }
        Ok(())
    }

    /// `date,truth,<model>...,ensemble,lower,upper`; unknown truth is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let names = self.model_names();
        let mut w = std::io::BufWriter::new(out);
        write!(w, "date,truth")?;
        for n in &names {
            write!(w, ",{n}")?;
        }
        writeln!(w, ",ensemble,lower,upper")?;
        for row in &self.rows {
            write!(w, "{},{}", row.date, row.truth.map(fmt_num).unwrap_or_default())?;
            for n in &names {
                write!(w, ",{}", fmt_num(row.predictions[n]))?;
            }
            writeln!(w, ",{},{},{}", fmt_num(row.point), fmt_num(row.lower), fmt_num(row.upper))?;
        }
        w.flush()
    }
}

/// Per-model predictions, ensemble point and ensemble interval for `rows`.
pub fn forecast_rows(
    models: &[TrainedModel],
    weights: &[f64],
    rows: &FeatureRows,
    truth: Option<&[f64]>,
    cfg: &BootstrapConfig,
) -> Result<Vec<ForecastRow>, ForecastError> {
    if let Some(t) = truth {
        if t.len() != rows.len() {
            return Err(ForecastError::LengthMismatch {
                left: rows.len(),
                right: t.len(),
            });
        }
    }
    let bands = models
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let cfg = BootstrapConfig {
                seed: cfg.seed.wrapping_add(i as u64),
                ..*cfg
            };
            bootstrap_intervals(m, rows, &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ensemble = ensemble_intervals(&bands, weights)?;
    Ok((0..rows.len())
        .map(|i| ForecastRow {
            date: ensemble.dates[i],
            truth: truth.map(|t| t[i]),
            predictions: models
                .iter()
                .zip(&bands)
                .map(|(m, b)| (m.name.clone(), b.point[i]))
                .collect(),
            point: ensemble.point[i],
            lower: ensemble.lower[i],
            upper: ensemble.upper[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    /// Registry models in order, then the baseline.
    pub summaries: Vec<ModelSummary>,
    pub baseline: TrainedModel,
    pub ensemble_test: Metrics,
    /// Models refit on every labelled row, in registry order.
    pub models: Vec<TrainedModel>,
    pub weights: Vec<f64>,
    /// Test-period rows (from train-only fits) followed by future rows.
    pub forecast: EnsembleForecast,
    pub n_train: usize,
    pub n_test: usize,
}

/// Fits every registry model on rows dated before `test_start`, scores them
/// on the rest, weights them by test RMSE, and refits on all rows to forecast
/// beyond the data.
pub fn run_pipeline(
    arrivals: &DailySeries,
    indicators: &[IndicatorSeries],
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, ForecastError> {
    if cfg.models.is_empty() {
        return Err(ForecastError::NoModels);
    }
    let mut names: Vec<&str> = cfg.models.iter().map(|m| m.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(ForecastError::InvalidSpec(format!("duplicate model name `{}`", w[0])));
    }
    cfg.bootstrap.validate()?;
    let matrix = build_features(arrivals, indicators, &cfg.features)?;
    let future = build_future_rows(arrivals, indicators, &cfg.features)?;
    let (train, test) = matrix.split_at_date(cfg.test_start);
    if train.n_rows() == 0 || test.n_rows() == 0 {
        return Err(ForecastError::EmptySplit(cfg.test_start));
    }
    let test_rows = test.rows();

    let baseline = baseline_historical_mean(&train)?;
    let baseline = baseline.clone().with_test_metrics(evaluate(&predict(&baseline, &test_rows)?, &test.y)?);

    let fitted = cfg
        .models
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let model = fit_model(spec, &train, &cfg.cv, cfg.seed.wrapping_add(i as u64))?;
            let metrics = evaluate(&predict(&model, &test_rows)?, &test.y)?;
            Ok(model.with_test_metrics(metrics))
        })
        .collect::<Result<Vec<_>, ForecastError>>()?;

    let rmse: Vec<f64> = fitted.iter().map(|m| m.test_rmse.expect("scored")).collect();
    let weights = ensemble_weights(&rmse)?;

    let test_forecast = forecast_rows(&fitted, &weights, &test_rows, Some(&test.y), &cfg.bootstrap)?;
    let ensemble_point: Vec<f64> = test_forecast.iter().map(|r| r.point).collect();
    let ensemble_test = evaluate(&ensemble_point, &test.y)?;

    let models = fitted
        .par_iter()
        .map(|m| {
            let mut full = refit(m, &matrix)?;
            full.test_rmse = m.test_rmse;
            full.test_mae = m.test_mae;
            Ok(full)
        })
        .collect::<Result<Vec<_>, ForecastError>>()?;

    let mut rows = test_forecast;
    if !future.is_empty() {
        rows.extend(forecast_rows(&models, &weights, &future, None, &cfg.bootstrap)?);
    }

    let mut summaries: Vec<ModelSummary> = fitted
        .iter()
        .zip(&weights)
        .map(|(m, w)| summary(m, Some(*w)))
        .collect();
    summaries.push(summary(&baseline, None));

    let forecast = EnsembleForecast {
        level: cfg.bootstrap.level,
        weights: fitted.iter().map(|m| m.name.clone()).zip(weights.iter().copied()).collect(),
        rows,
    };
    forecast.validate()?;

    Ok(PipelineOutput {
        summaries,
        baseline,
        ensemble_test,
        models,
        weights,
        forecast,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
    })
}

fn summary(m: &TrainedModel, weight: Option<f64>) -> ModelSummary {
    ModelSummary {
        name: m.name.clone(),
        kind: m.kind,
        hyperparams: m.hyperparams.clone(),
        cv_mse: m.cv_mse,
        test_rmse: m.test_rmse.expect("scored"),
        test_mae: m.test_mae.expect("scored"),
        weight,
    }
}
