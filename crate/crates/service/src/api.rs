//! HTTP routes under `/v1`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use data_ingest::{build_panel, read_panel_csv, CoverageReport, DateRange, Panel};
use forecast::artifact::EnsembleArtifact;
use forecast::{run_pipeline, DailySeries, EnsembleForecast, Metrics, ModelSummary, PipelineConfig};
use serde::{Deserialize, Serialize};
use sim_core::{ContingencyRule, PipelineState};
use thiserror::Error;
use tokio::sync::{Mutex, OwnedMutexGuard};

use crate::error::FieldError;
use crate::json::{parse_json, JsonBody};
use crate::ops::{
    indicator_view, parse_window, run_sensitivity, run_simulation, IndicatorsResponse, SensitivityRequest,
    SensitivityResponse, SeriesInput, SimulateRequest, SimulateResponse,
};
use crate::scenario::{check_sliders, default_sliders, NewScenario, RunRecord, ScenarioDocument, SliderRange, StoredRun};
use crate::store::{Store, StoreError};
use crate::ApiError;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot read {path}: {message}")]
    Load { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    pub arrivals: SeriesInput,
    /// Indicator series; when absent the ingested panel is used.
    #[serde(default)]
    pub indicators: Option<Vec<SeriesInput>>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    /// One row per registry model, then the historical-mean baseline.
    pub metrics: Vec<ModelSummary>,
    pub ensemble: Metrics,
    pub weights: BTreeMap<String, f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LatestForecast {
    summary: TrainResponse,
    forecast: EnsembleForecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRequest {
    pub series: Vec<SeriesInput>,
    #[serde(default)]
    pub range: Option<DateRange>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    #[serde(default)]
    pub rules: Vec<ContingencyRule>,
}

struct Inner {
    store: Store,
    data_dir: Option<PathBuf>,
    latest: ArcSwapOption<LatestForecast>,
    panel: ArcSwapOption<Panel>,
    training: Arc<Mutex<()>>,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn load_err(path: &Path, message: impl ToString) -> StartupError {
    StartupError::Load {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

impl AppState {
    /// State with nothing persisted.
    pub fn in_memory() -> Self {
        Self::build(Store::in_memory(), None, None, None)
    }

    /// Opens (or creates) the store under `data_dir` and reloads any saved
    /// forecast and indicator panel.
    pub fn open(data_dir: &Path) -> Result<Self, StartupError> {
        let store = Store::open(&data_dir.join("store.json"))?;

        let latest_path = data_dir.join("forecast").join("latest.json");
        let latest = match std::fs::read(&latest_path) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes).map_err(|e| load_err(&latest_path, e))?),
            Err(_) => None,
        };

        let values_path = data_dir.join("panel").join("values.csv");
        let mask_path = data_dir.join("panel").join("mask.csv");
        let panel = match std::fs::File::open(&values_path) {
            Ok(values) => {
                let mask = std::fs::File::open(&mask_path).ok();
                Some(read_panel_csv(values, mask).map_err(|e| load_err(&values_path, e))?)
            }
            Err(_) => None,
        };
        Ok(Self::build(store, Some(data_dir.to_path_buf()), latest, panel))
    }

    fn build(store: Store, data_dir: Option<PathBuf>, latest: Option<LatestForecast>, panel: Option<Panel>) -> Self {
        AppState {
            inner: Arc::new(Inner {
                store,
                data_dir,
                latest: ArcSwapOption::from(latest.map(Arc::new)),
                panel: ArcSwapOption::from(panel.map(Arc::new)),
                training: Arc::new(Mutex::new(())),
            }),
        }
    }

    /// Claims the exclusive training slot, if free.
    pub fn try_reserve_training(&self) -> Option<OwnedMutexGuard<()>> {
        self.inner.training.clone().try_lock_owned().ok()
    }

    pub fn set_panel(&self, panel: Panel) -> Result<(), std::io::Error> {
        if let Some(dir) = &self.inner.data_dir {
            let dir = dir.join("panel");
            std::fs::create_dir_all(&dir)?;
            let to_io = |e: data_ingest::IngestError| std::io::Error::other(e.to_string());
            panel.write_values_csv(std::fs::File::create(dir.join("values.csv"))?).map_err(to_io)?;
            panel.write_mask_csv(std::fs::File::create(dir.join("mask.csv"))?).map_err(to_io)?;
        }
        self.inner.panel.store(Some(Arc::new(panel)));
        Ok(())
    }

    fn save_forecast(&self, latest: &LatestForecast, artifact: &EnsembleArtifact) -> std::io::Result<()> {
        if let Some(dir) = &self.inner.data_dir {
            let dir = dir.join("forecast");
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("artifact.json"), artifact.to_json())?;
            std::fs::write(
                dir.join("latest.json"),
                serde_json::to_vec_pretty(latest).expect("forecast serializes"),
            )?;
        }
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/simulate", post(simulate_handler))
        .route("/sensitivity", post(sensitivity_handler))
        .route("/sliders", get(sliders_handler))
        .route("/scenarios", get(list_scenarios).post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/scenarios/{id}/runs", post(create_run))
        .route("/runs/{id}", get(get_run))
        .route("/forecast/train", post(train_handler))
        .route("/forecast/latest", get(latest_handler))
        .route("/indicators", get(indicators_handler).post(ingest_handler));
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .nest("/v1", v1)
        .fallback(|| async { ApiError::not_found("$", "no such route") })
        .method_not_allowed_fallback(|| async {
            let mut e = ApiError::malformed("$", "method not allowed for this route");
            e.status = StatusCode::METHOD_NOT_ALLOWED;
            e.code = "method_not_allowed";
            e
        })
        .with_state(state)
}

fn params_errors(params: &sim_core::ScenarioParams, prefix: &str) -> Vec<FieldError> {
    params
        .violations()
        .iter()
        .map(|e| FieldError {
            path: format!("{prefix}.{}", e.field().unwrap_or("$")),
            message: e.to_string(),
        })
        .collect()
}

fn initial_errors(initial: &sim_core::Occupancy) -> Vec<FieldError> {
    match PipelineState::new(*initial).validate() {
        Ok(()) => Vec::new(),
        Err(e) => vec![ApiError::from_sim(&e, "initial").fields.remove(0)],
    }
}

fn rule_errors(rules: &[ContingencyRule]) -> Vec<FieldError> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, r) in rules.iter().enumerate() {
        if !seen.insert(r.id.as_str()) {
            out.push(FieldError {
                path: format!("rules[{i}].id"),
                message: format!("duplicate rule id `{}`", r.id),
            });
        }
        if r.threshold.is_nan() || r.threshold < 0.0 {
            out.push(FieldError {
                path: format!("rules[{i}].threshold"),
                message: format!("threshold must be >= 0, got {}", r.threshold),
            });
        }
    }
    out
}

fn reject_if_any(errors: Vec<FieldError>) -> Result<(), ApiError> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ApiError::invalid_fields(errors))
    }
}

async fn simulate_handler(JsonBody(req): JsonBody<SimulateRequest>) -> Result<Json<SimulateResponse>, ApiError> {
    let mut errors = params_errors(&req.params, "params");
    errors.extend(initial_errors(&req.initial));
    errors.extend(rule_errors(&req.rules));
    reject_if_any(errors)?;
    run_simulation(&req).map(Json).map_err(|e| ApiError::from_sim(&e, "params"))
}

async fn sensitivity_handler(
    JsonBody(req): JsonBody<SensitivityRequest>,
) -> Result<Json<SensitivityResponse>, ApiError> {
    let mut errors = params_errors(&req.base, "base");
    errors.extend(initial_errors(&req.initial));
    match req.param.parse::<sim_core::PlannerParam>() {
        Err(e) => errors.push(FieldError {
            path: "param".into(),
            message: e.to_string(),
        }),
        Ok(param) => {
            if req.grid.is_empty() {
                errors.push(FieldError {
                    path: "grid".into(),
                    message: "grid must not be empty".into(),
                });
            }
            for (i, v) in req.grid.iter().enumerate() {
                if let Err(e) = param.check(*v) {
                    errors.push(FieldError {
                        path: format!("grid[{i}]"),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    if let Some(day) = req.snapshot_day {
        if day > req.base.horizon {
            errors.push(FieldError {
                path: "snapshot_day".into(),
                message: format!("day {day} is beyond the horizon {}", req.base.horizon),
            });
        }
    }
    reject_if_any(errors)?;
    run_sensitivity(&req).map(Json).map_err(|e| ApiError::from_sim(&e, "base"))
}

async fn sliders_handler() -> Json<BTreeMap<String, SliderRange>> {
    Json(default_sliders())
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Vec<ScenarioDocument>> {
    Json(state.inner.store.scenarios())
}

fn store_error(e: StoreError) -> ApiError {
    ApiError::internal(e.to_string())
}

async fn create_scenario(
    State(state): State<AppState>,
    JsonBody(req): JsonBody<NewScenario>,
) -> Result<(StatusCode, Json<ScenarioDocument>), ApiError> {
    let mut sliders = default_sliders();
    sliders.extend(req.sliders);
    let mut errors = Vec::new();
    if req.name.trim().is_empty() {
        errors.push(FieldError {
            path: "name".into(),
            message: "name must not be empty".into(),
        });
    }
    errors.extend(params_errors(&req.params, "params"));
    errors.extend(initial_errors(&req.initial));
    errors.extend(check_sliders(&sliders, &req.params));
    reject_if_any(errors)?;
    let doc = ScenarioDocument {
        id: String::new(),
        name: req.name,
        params: req.params,
        initial: req.initial,
        sliders,
        created_at: Utc::now(),
    };
    let doc = state.inner.store.insert_scenario(doc).map_err(store_error)?;
    Ok((StatusCode::CREATED, Json(doc)))
}

async fn get_scenario(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ScenarioDocument>, ApiError> {
    state
        .inner
        .store
        .scenario(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("id", format!("no scenario `{id}`")))
}

async fn create_run(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<StoredRun>), ApiError> {
    let req: RunRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RunRequest::default()
    } else {
        parse_json(&body)?
    };
    let doc = state
        .inner
        .store
        .scenario(&id)
        .ok_or_else(|| ApiError::not_found("id", format!("no scenario `{id}`")))?;
    reject_if_any(rule_errors(&req.rules))?;
    let sim = run_simulation(&SimulateRequest {
        params: doc.params.clone(),
        initial: doc.initial,
        rules: req.rules.clone(),
    })
    .map_err(|e| ApiError::from_sim(&e, "params"))?;
    let run = StoredRun {
        record: RunRecord {
            id: String::new(),
            scenario_id: doc.id,
            trace_ref: String::new(),
            rules: req.rules,
            triggers: sim.triggers,
            overflow: sim.overflow,
            created_at: Utc::now(),
        },
        trace: sim.trace,
    };
    let run = state.inner.store.insert_run(run).map_err(store_error)?;
    Ok((StatusCode::CREATED, Json(run)))
}

async fn get_run(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<StoredRun>, ApiError> {
    state
        .inner
        .store
        .run(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("id", format!("no run `{id}`")))
}

async fn train_handler(
    State(state): State<AppState>,
    JsonBody(req): JsonBody<TrainRequest>,
) -> Result<Json<TrainResponse>, ApiError> {
    let guard = state
        .try_reserve_training()
        .ok_or_else(|| ApiError::conflict("forecast", "a training run is already in progress"))?;

    let arrivals = req
        .arrivals
        .to_indicator()
        .ok_or_else(|| ApiError::invalid("arrivals.values", "arrivals series is empty"))?;
    let arrivals = DailySeries {
        name: if req.arrivals.id.is_empty() { "arrivals".into() } else { req.arrivals.id.clone() },
        units: "persons/day".into(),
        start: arrivals.range.start,
        values: arrivals.values,
    };
    let indicators = match &req.indicators {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.id.is_empty() {
                    return Err(ApiError::invalid(&format!("indicators[{i}].id"), "indicator id is required"));
                }
                s.to_indicator()
                    .ok_or_else(|| ApiError::invalid(&format!("indicators[{i}].values"), "series is empty"))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => state
            .inner
            .panel
            .load_full()
            .ok_or_else(|| ApiError::invalid("indicators", "no indicators given and none ingested"))?
            .columns
            .clone(),
    };

    let config = req.config;
    let out = tokio::task::spawn_blocking(move || {
        let _slot = guard;
        run_pipeline(&arrivals, &indicators, &config).map(|out| (out, config))
    })
    .await
    .map_err(|e| ApiError::internal(format!("training task failed: {e}")))?
    .map_err(|e| ApiError::from_forecast(&e))?;
    let (out, config) = out;

    let summary = TrainResponse {
        metrics: out.summaries.clone(),
        ensemble: out.ensemble_test,
        weights: out.forecast.weights.clone(),
        n_train: out.n_train,
        n_test: out.n_test,
        seed: config.seed,
    };
    let latest = LatestForecast {
        summary: summary.clone(),
        forecast: out.forecast.clone(),
    };
    let artifact = EnsembleArtifact::from_output(&out, &config.features, &config.bootstrap);
    state
        .save_forecast(&latest, &artifact)
        .map_err(|e| ApiError::internal(format!("cannot save forecast: {e}")))?;
    state.inner.latest.store(Some(Arc::new(latest)));
    Ok(Json(summary))
}

async fn latest_handler(State(state): State<AppState>) -> Result<Json<EnsembleForecast>, ApiError> {
    state
        .inner
        .latest
        .load_full()
        .map(|l| Json(l.forecast.clone()))
        .ok_or_else(|| ApiError::not_found("forecast", "no ensemble has been trained yet"))
}

async fn ingest_handler(
    State(state): State<AppState>,
    JsonBody(req): JsonBody<IngestRequest>,
) -> Result<Json<CoverageReport>, ApiError> {
    let series = req
        .series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.id.is_empty() {
                return Err(ApiError::invalid(&format!("series[{i}].id"), "series id is required"));
            }
            s.to_indicator()
                .ok_or_else(|| ApiError::invalid(&format!("series[{i}].values"), "series is empty"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panel = build_panel(&series, req.range).map_err(|e| ApiError::invalid("series", e.to_string()))?;
    let report = panel.coverage();
    state
        .set_panel(panel)
        .map_err(|e| ApiError::internal(format!("cannot save panel: {e}")))?;
    Ok(Json(report))
}

async fn indicators_handler(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
) -> Result<Json<IndicatorsResponse>, ApiError> {
    let mut window = None;
    for pair in query.as_deref().unwrap_or("").split('&').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        match key {
            "window" => {
                let (start, end) = parse_window(value).map_err(|m| ApiError::malformed("window", m))?;
                let range = DateRange::new(start, end).map_err(|e| ApiError::invalid("window", e.to_string()))?;
                window = Some(range);
            }
            other => return Err(ApiError::malformed(other, format!("unknown query parameter `{other}`"))),
        }
    }
    let panel = state
        .inner
        .panel
        .load_full()
        .ok_or_else(|| ApiError::not_found("indicators", "no indicator panel has been ingested"))?;
    Ok(Json(indicator_view(&panel, window)))
}
