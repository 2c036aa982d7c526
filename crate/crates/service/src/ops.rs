//! Operations shared by the HTTP handlers and the command line.

use chrono::{Days, NaiveDate};
use data_ingest::{normalize_for_display, DateRange, FillFlag, IndicatorSeries, Panel};
use serde::{Deserialize, Serialize};
use sim_core::{
    bottlenecks, evaluate_triggers, sensitivity_sweep, shelter_overflow, simulate, snapshot_at, Bottleneck,
    ContingencyRule, Occupancy, Overflow, PipelineState, PlannerParam, ScenarioParams, SimError,
    SimulationTrace, SweepSeries, TriggerHit,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub params: ScenarioParams,
    #[serde(default)]
    pub initial: Occupancy,
    #[serde(default)]
    pub rules: Vec<ContingencyRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    /// Occupancy of every stage on days `0..=horizon`, plus daily flows.
    pub trace: SimulationTrace,
    pub overflow: Option<Overflow>,
    pub bottlenecks: Vec<Bottleneck>,
    pub triggers: Vec<TriggerHit>,
}

pub fn run_simulation(req: &SimulateRequest) -> Result<SimulateResponse, SimError> {
    let initial = PipelineState::new(req.initial);
    let trace = simulate(&initial, &req.params)?;
    Ok(SimulateResponse {
        overflow: shelter_overflow(&trace, req.params.shelter_capacity),
        bottlenecks: bottlenecks(&trace)?,
        triggers: evaluate_triggers(&trace, &req.rules)?,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityRequest {
    pub base: ScenarioParams,
    #[serde(default)]
    pub initial: Occupancy,
    /// Parameter name, e.g. `relocation_capacity`.
    pub param: String,
    pub grid: Vec<f64>,
    /// Day of the cross-section; defaults to the horizon.
    #[serde(default)]
    pub snapshot_day: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPoint {
    pub value: f64,
    pub sheltered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub day: u32,
    pub points: Vec<SnapshotPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResponse {
    pub param: PlannerParam,
    pub horizon: u32,
    /// Sheltered occupancy over time, one series per grid value.
    pub series: Vec<SweepSeries>,
    /// Sheltered occupancy against grid value on one day.
    pub snapshot: Snapshot,
}

pub fn run_sensitivity(req: &SensitivityRequest) -> Result<SensitivityResponse, SimError> {
    let param: PlannerParam = req.param.parse()?;
    let sweep = sensitivity_sweep(&req.base, param, &req.grid, &PipelineState::new(req.initial))?;
    let day = req.snapshot_day.unwrap_or(sweep.horizon);
    let points = snapshot_at(&sweep, day)?
        .into_iter()
        .map(|(value, sheltered)| SnapshotPoint { value, sheltered })
        .collect();
    Ok(SensitivityResponse {
        param,
        horizon: sweep.horizon,
        series: sweep.series,
        snapshot: Snapshot { day, points },
    })
}

/// Daily series supplied inline, `null` for missing days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesInput {
    #[serde(default)]
    pub id: String,
    pub start: NaiveDate,
    pub values: Vec<Option<f64>>,
}

impl SeriesInput {
    pub fn to_indicator(&self) -> Option<IndicatorSeries> {
        let n = self.values.len();
        let end = self.start.checked_add_days(Days::new(n.checked_sub(1)? as u64))?;
        Some(IndicatorSeries {
            source_id: self.id.clone(),
            range: DateRange { start: self.start, end },
            values: self.values.clone(),
            fill_mask: self
                .values
                .iter()
                .map(|v| if v.is_some() { FillFlag::Observed } else { FillFlag::Missing })
                .collect(),
        })
    }

    pub fn from_indicator(series: &IndicatorSeries) -> Self {
        SeriesInput {
            id: series.source_id.clone(),
            start: series.range.start,
            values: series.values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorView {
    pub id: String,
    /// Display-scaled to `[0, 1]` over the whole ingested series.
    pub values: Vec<Option<f64>>,
    pub raw: Vec<Option<f64>>,
    pub mask: Vec<FillFlag>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorsResponse {
    /// The requested window, echoed.
    pub window: DateRange,
    pub dates: Vec<NaiveDate>,
    pub sources: Vec<IndicatorView>,
}

/// Normalized slice of the panel over `window` (the whole panel if `None`).
pub fn indicator_view(panel: &Panel, window: Option<DateRange>) -> IndicatorsResponse {
    let window = window.unwrap_or(panel.range);
    let overlap = panel.range.intersect(&window);
    let dates = overlap.map(|r| r.dates().collect()).unwrap_or_default();
    let sources = panel
        .columns
        .iter()
        .map(|col| {
            let normalized = normalize_for_display(&col.values);
            let (lo, hi) = match overlap {
                Some(r) => (
                    col.range.index_of(r.start).expect("overlap inside panel"),
                    col.range.index_of(r.end).expect("overlap inside panel") + 1,
                ),
                None => (0, 0),
            };
            IndicatorView {
                id: col.source_id.clone(),
                values: normalized.values[lo..hi].to_vec(),
                raw: col.values[lo..hi].to_vec(),
                mask: col.fill_mask[lo..hi].to_vec(),
                degenerate: normalized.degenerate,
            }
        })
        .collect();
    IndicatorsResponse {
        window,
        dates,
        sources,
    }
}

/// Parses `START..END` with ISO dates.
pub fn parse_window(text: &str) -> Result<(NaiveDate, NaiveDate), String> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| format!("expected START..END, got `{text}`"))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<NaiveDate>()
            .map_err(|e| format!("bad date `{s}`: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use data_ingest::build_panel;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn panel() -> Panel {
        let a = IndicatorSeries::observed("a", d("2022-01-01"), vec![1.0, 2.0, 3.0, 4.0]);
        let c = IndicatorSeries::observed("c", d("2022-01-01"), vec![7.0; 4]);
        build_panel(&[a, c], None).unwrap()
    }

    #[test]
    fn full_window_and_constant_indicator() {
        let view = indicator_view(&panel(), None);
        assert_eq!(view.dates.len(), 4);
        assert_eq!(view.sources[0].values, vec![Some(0.0), Some(1.0 / 3.0), Some(2.0 / 3.0), Some(1.0)]);
        assert!(view.sources[1].degenerate);
        assert!(view.sources[1].values.iter().all(|v| *v == Some(0.5)));
    }

    #[test]
    fn partial_and_disjoint_windows() {
        let w = DateRange::new(d("2022-01-03"), d("2022-02-01")).unwrap();
        let view = indicator_view(&panel(), Some(w));
        assert_eq!(view.window, w);
        assert_eq!(view.dates, vec![d("2022-01-03"), d("2022-01-04")]);
        assert_eq!(view.sources[0].raw, vec![Some(3.0), Some(4.0)]);

        let beyond = DateRange::new(d("2023-01-01"), d("2023-01-05")).unwrap();
        let view = indicator_view(&panel(), Some(beyond));
        assert_eq!(view.window, beyond);
        assert!(view.dates.is_empty());
        assert!(view.sources.iter().all(|s| s.values.is_empty() && s.mask.is_empty()));
    }

    #[test]
    fn window_syntax() {
        assert_eq!(parse_window("2022-01-01..2022-01-31").unwrap(), (d("2022-01-01"), d("2022-01-31")));
        assert!(parse_window("2022-01-01").is_err());
        assert!(parse_window("2022-13-01..2022-01-31").is_err());
    }

    #[test]
    fn series_input_round_trip() {
        let s = SeriesInput { id: "x".into(), start: d("2022-01-01"), values: vec![Some(1.0), None] };
        let ind = s.to_indicator().unwrap();
        assert_eq!(ind.fill_mask, vec![FillFlag::Observed, FillFlag::Missing]);
        assert_eq!(SeriesInput::from_indicator(&ind), s);
        assert!(SeriesInput { values: vec![], ..s }.to_indicator().is_none());
    }
}
