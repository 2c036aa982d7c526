//! The `planner` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use data_ingest::{
    align_daily, build_panel, parse_indicator_file, read_panel_csv, DateRange, IndicatorSeries, IndicatorSource,
    Panel, SourceRegistry,
};
use forecast::artifact::EnsembleArtifact;
use forecast::synthetic::{generate, RegimeConfig};
use forecast::{build_features, build_future_rows, evaluate, run_pipeline, DailySeries, EnsembleForecast, ForecastError, PipelineConfig};
use serde::Serialize;
use sim_core::export::{write_flows_csv, write_occupancy_csv};
use sim_core::scenario::Scenario;
use sim_core::ContingencyRule;
use thiserror::Error;

use crate::api::TrainResponse;
use crate::config::ServiceConfig;
use crate::ops::{run_sensitivity, run_simulation, SensitivityRequest, SimulateRequest};

#[derive(Debug, Parser)]
#[command(name = "planner", version, about = "Displacement pipeline simulation and arrival forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse indicator files from a registry and write an aligned panel.
    Ingest(IngestArgs),
    /// Run one scenario and write its occupancy table.
    Simulate(SimulateArgs),
    /// Vary one parameter over a grid.
    Sweep(SweepArgs),
    /// Train the model ensemble and save it.
    Train(TrainArgs),
    /// Forecast with a saved ensemble.
    Predict(PredictArgs),
    /// Score predictions against truth.
    Evaluate(EvaluateArgs),
    /// Start the HTTP server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub end: Option<NaiveDate>,
    #[arg(long, default_value_t = data_ingest::DEFAULT_MAX_GAP)]
    pub max_gap: u32,
    /// Receives `values.csv` and `mask.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// TOML file of `[[rule]]` tables.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Occupancy CSV (`day,stage,occupancy`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub flows: Option<PathBuf>,
    /// Full response JSON, as returned by `POST /v1/simulate`.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub snapshot_day: Option<u32>,
    /// Response JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// CSV with `date` and an arrivals column.
    #[arg(long, conflicts_with = "synthetic", requires = "panel")]
    pub arrivals: Option<PathBuf>,
    #[arg(long, default_value = "arrivals")]
    pub arrivals_column: String,
    /// Panel `values.csv` written by `ingest`.
    #[arg(long, conflicts_with = "synthetic")]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Train on the built-in synthetic regime.
    #[arg(long, required_unless_present = "arrivals")]
    pub synthetic: bool,
    #[arg(long)]
    pub test_start: Option<NaiveDate>,
    /// Pipeline settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the model and bootstrap seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Saved ensemble artifact (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Forecast CSV for the test period and beyond.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub arrivals: PathBuf,
    #[arg(long, default_value = "arrivals")]
    pub arrivals_column: String,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV whose last column holds predictions.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

fn invalid(e: impl ToString) -> CliError {
    CliError::Invalid(e.to_string())
}

fn failed(e: impl ToString) -> CliError {
    CliError::Failed(e.to_string())
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Failed(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_at(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn forecast_error(e: ForecastError) -> CliError {
    match e {
        ForecastError::DegenerateMatrix(_) | ForecastError::Artifact(_) => failed(e),
        _ => invalid(e),
    }
}

/// Runs every subcommand except `serve`.
pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_files(a),
        Command::Serve(_) => Err(failed("serve needs an async runtime")),
    }
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let registry = SourceRegistry::load(&a.registry).map_err(invalid)?;
    let mut series = Vec::new();
    let mut reports = Vec::new();
    for source in &registry.sources {
        let file = source
            .file
            .as_ref()
            .ok_or_else(|| invalid(format!("source `{}` has no file", source.id)))?;
        let (records, mut report) = parse_indicator_file(file, source).map_err(invalid)?;
        let first = records.iter().map(|r| r.date).min();
        let last = records.iter().map(|r| r.date).max();
        let (Some(first), Some(last)) = (first, last) else {
            return Err(invalid(format!("source `{}` has no accepted rows", source.id)));
        };
        let range = DateRange::new(a.start.unwrap_or(first), a.end.unwrap_or(last)).map_err(invalid)?;
        let aligned = align_daily(&records, source, range, a.max_gap).map_err(invalid)?;
        aligned.record_gaps(&mut report);
        series.push(aligned);
        reports.push(report);
    }
    let panel = build_panel(&series, None).map_err(invalid)?;
    std::fs::create_dir_all(&a.out_dir).map_err(io_at(&a.out_dir))?;
    let io = |e: data_ingest::IngestError| failed(e);
    panel.write_values_csv(create(&a.out_dir.join("values.csv"))?).map_err(io)?;
    panel.write_mask_csv(create(&a.out_dir.join("mask.csv"))?).map_err(io)?;
    print_json(&serde_json::json!({ "sources": reports, "coverage": panel.coverage() }));
    Ok(())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default, rename = "rule")]
    rules: Vec<ContingencyRule>,
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Scenario::from_toml(&read_text(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&a.scenario)?;
    let rules = match &a.rules {
        Some(p) => {
            toml::from_str::<RuleFile>(&read_text(p)?)
                .map_err(|e| invalid(format!("{}: {e}", p.display())))?
                .rules
        }
        None => Vec::new(),
    };
    let req = SimulateRequest {
        params: scenario.params,
        initial: scenario.initial.occupancy,
        rules,
    };
    let resp = run_simulation(&req).map_err(invalid)?;
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        write_occupancy_csv(&resp.trace, &mut w).and_then(|_| w.flush()).map_err(io_at(p))?;
    }
    if let Some(p) = &a.flows {
        let mut w = create(p)?;
        write_flows_csv(&resp.trace, &mut w).and_then(|_| w.flush()).map_err(io_at(p))?;
    }
    if let Some(p) = &a.json {
        let mut w = create(p)?;
        serde_json::to_writer(&mut w, &resp).map_err(failed)?;
        w.flush().map_err(io_at(p))?;
    }
    print_json(&serde_json::json!({
        "horizon": req.params.horizon,
        "overflow": resp.overflow,
        "bottlenecks": resp.bottlenecks,
        "triggers": resp.triggers,
    }));
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&a.scenario)?;
    let req = SensitivityRequest {
        base: scenario.params,
        initial: scenario.initial.occupancy,
        param: a.param,
        grid: a.grid,
        snapshot_day: a.snapshot_day,
    };
    let resp = run_sensitivity(&req).map_err(invalid)?;
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, &resp).map_err(failed)?;
            w.flush().map_err(io_at(p))?;
            for point in &resp.snapshot.points {
                println!("{}={} sheltered@{}={}", resp.param, point.value, resp.snapshot.day, point.sheltered);
            }
        }
        None => print_json(&resp),
    }
    Ok(())
}

/// Reads a `date,<column>` file into a gap-preserving daily series.
pub fn read_arrivals(path: &Path, column: &str) -> Result<DailySeries, CliError> {
    let source = IndicatorSource::daily("arrivals", column);
    let (records, _) = parse_indicator_file(path, &source).map_err(invalid)?;
    let first = records.iter().map(|r| r.date).min();
    let last = records.iter().map(|r| r.date).max();
    let (Some(first), Some(last)) = (first, last) else {
        return Err(invalid(format!("{}: no arrivals rows", path.display())));
    };
    let range = DateRange::new(first, last).map_err(invalid)?;
    let aligned = align_daily(&records, &source, range, 0).map_err(invalid)?;
    Ok(DailySeries {
        name: "arrivals".into(),
        units: String::new(),
        start: first,
        values: aligned.values,
    })
}

fn read_panel(values: &Path, mask: Option<&Path>) -> Result<Panel, CliError> {
    let v = File::open(values).map_err(io_at(values))?;
    let m = match mask {
        Some(p) => Some(File::open(p).map_err(io_at(p))?),
        None => None,
    };
    read_panel_csv(v, m).map_err(invalid)
}

fn write_forecast(path: &Path, forecast: &EnsembleForecast) -> Result<(), CliError> {
    let mut w = create(path)?;
    forecast.write_csv(&mut w).map_err(failed)?;
    w.flush().map_err(io_at(path))
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let (arrivals, indicators, mut cfg): (DailySeries, Vec<IndicatorSeries>, PipelineConfig) = if a.synthetic {
        let regime = generate(&RegimeConfig::default());
        let cfg = regime.pipeline_config(a.seed.unwrap_or(0));
        (regime.arrivals, regime.indicators, cfg)
    } else {
        let arrivals_path = a.arrivals.as_deref().expect("clap requires --arrivals or --synthetic");
        let arrivals = read_arrivals(arrivals_path, &a.arrivals_column)?;
        let panel_path = a.panel.as_deref().expect("clap requires --panel with --arrivals");
        let panel = read_panel(panel_path, a.mask.as_deref())?;
        let mut table = match &a.config {
            Some(p) => toml::from_str::<toml::Table>(&read_text(p)?)
                .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        if let Some(d) = a.test_start {
            table.insert("test_start".into(), toml::Value::String(d.to_string()));
        }
        if !table.contains_key("test_start") {
            return Err(invalid("--test-start is required unless the config sets test_start"));
        }
        let cfg: PipelineConfig = table.try_into().map_err(|e| invalid(format!("pipeline config: {e}")))?;
        (arrivals, panel.columns, cfg)
    };
    if a.synthetic {
        if let Some(d) = a.test_start {
            cfg.test_start = d;
        }
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        cfg.bootstrap.seed = seed;
    }
    let out = run_pipeline(&arrivals, &indicators, &cfg).map_err(forecast_error)?;
    let artifact = EnsembleArtifact::from_output(&out, &cfg.features, &cfg.bootstrap);
    let mut w = create(&a.out)?;
    w.write_all(artifact.to_json().as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_at(&a.out))?;
    if let Some(p) = &a.forecast {
        write_forecast(p, &out.forecast)?;
    }
    print_json(&TrainResponse {
        metrics: out.summaries,
        ensemble: out.ensemble_test,
        weights: out.forecast.weights,
        n_train: out.n_train,
        n_test: out.n_test,
        seed: cfg.seed,
    });
    Ok(())
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let artifact = EnsembleArtifact::from_json(&read_text(&a.artifact)?).map_err(invalid)?;
    let arrivals = read_arrivals(&a.arrivals, &a.arrivals_column)?;
    let panel = read_panel(&a.panel, a.mask.as_deref())?;
    let labelled = build_features(&arrivals, &panel.columns, &artifact.features).map_err(forecast_error)?;
    let mut rows = artifact
        .forecast(&labelled.rows(), Some(&labelled.y))
        .map_err(forecast_error)?;
    let future = build_future_rows(&arrivals, &panel.columns, &artifact.features).map_err(forecast_error)?;
    if !future.is_empty() {
        rows.extend(artifact.forecast(&future, None).map_err(forecast_error)?);
    }
    let forecast = EnsembleForecast {
        level: artifact.bootstrap.level,
        weights: artifact
            .models
            .iter()
            .map(|m| m.name.clone())
            .zip(artifact.weights.iter().copied())
            .collect(),
        rows,
    };
    write_forecast(&a.out, &forecast)?;
    println!("{} rows written to {}", forecast.rows.len(), a.out.display());
    Ok(())
}

fn last_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| failed(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let cell = rec.iter().next_back().unwrap_or("");
        let v = cell
            .parse::<f64>()
            .map_err(|_| invalid(format!("{}: row {}: `{cell}` is not a number", path.display(), i + 2)))?;
        out.push(v);
    }
    Ok(out)
}

fn evaluate_files(a: EvaluateArgs) -> Result<(), CliError> {
    let pred = last_column(&a.pred)?;
    let truth = last_column(&a.truth)?;
    let m = evaluate(&pred, &truth).map_err(invalid)?;
    println!("rmse={} mae={}", m.rmse, m.mae);
    Ok(())
}

/// Resolves server settings: config file, environment, then flags.
pub fn serve_config(a: &ServeArgs) -> Result<ServiceConfig, CliError> {
    let mut cfg = ServiceConfig::load(a.config.as_deref()).map_err(invalid)?;
    if let Some(b) = &a.bind {
        cfg.bind = b.clone();
    }
    if let Some(p) = a.port {
        cfg.port = p;
    }
    if let Some(d) = &a.data_dir {
        cfg.data_dir = d.clone();
    }
    Ok(cfg)
}
