use serde::{Deserialize, Serialize};

use crate::{simulate, PipelineState, PlannerParam, ScenarioParams, SimError, StageId};

/// `Sheltered` occupancy over time for one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub value: f64,
    pub sheltered: Vec<f64>,
}

/// One-at-a-time sweep: every series shares the base scenario except `param`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: PlannerParam,
    pub horizon: u32,
    /// In grid order.
    pub series: Vec<SweepSeries>,
}

pub fn sensitivity_sweep(
    base: &ScenarioParams,
    param: PlannerParam,
    grid: &[f64],
    initial: &PipelineState,
) -> Result<SweepResult, SimError> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    for &value in grid {
        param.check(value)?;
    }
    base.validate()?;

    let series = grid
        .iter()
        .map(|&value| {
            let trace = simulate(initial, &base.with(param, value))?;
            Ok(SweepSeries {
                value,
                sheltered: trace.series(StageId::Sheltered),
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    Ok(SweepResult {
        param,
        horizon: base.horizon,
        series,
    })
}

/// Cross-section of a sweep at day `t`, as `(grid value, sheltered)` pairs.
pub fn snapshot_at(sweep: &SweepResult, t: u32) -> Result<Vec<(f64, f64)>, SimError> {
    if t > sweep.horizon {
        return Err(SimError::DayOutOfRange {
            day: t,
            horizon: sweep.horizon,
        });
    }
    Ok(sweep
        .series
        .iter()
        .map(|s| (s.value, s.sheltered[t as usize]))
        .collect())
}
