//! Arrivals forecasting.
//!
//! The target is the trailing 7-day mean of daily arrivals, predicted 30 days
//! ahead from lagged target values, indicator levels, and calendar flags. A
//! registry of regression models is tuned with blocked time-series
//! cross-validation, combined with inverse-RMSE weights, and given residual
//! bootstrap prediction intervals.

pub mod artifact;
mod bootstrap;
mod calendar;
mod cv;
mod ensemble;
mod error;
mod features;
mod metrics;
pub mod models;
mod pipeline;
mod series;
pub mod synthetic;
mod target;

pub use bootstrap::{bootstrap_intervals, empirical_quantile, BootstrapConfig, PredictionBand, MIN_REPLICATES, MIN_RESIDUALS};
pub use calendar::{easter_sunday, CalendarConfig, CalendarFlag};
pub use cv::{blocked_cv_split, CvConfig, Fold};
pub use ensemble::{combine_predictions, ensemble_intervals, ensemble_predict, ensemble_weights};
pub use error::ForecastError;
pub use features::{build_features, build_future_rows, FeatureMatrix, FeatureRows, FeatureSpec};
pub use metrics::{evaluate, Metrics};
pub use models::{
    baseline_historical_mean, fit_model, predict, refit, Hyperparams, ModelKind, ModelSpec,
    Regressor, TrainedModel,
};
pub use pipeline::{
    forecast_rows, run_pipeline, EnsembleForecast, ForecastRow, ModelSummary, PipelineConfig,
    PipelineOutput,
};
pub use series::DailySeries;
pub use target::{build_target, TargetSpec};
