//! Stored scenarios, slider metadata and run records.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sim_core::{
    ContingencyRule, Occupancy, Overflow, PlannerParam, ScenarioParams, SimulationTrace, TriggerHit,
};

use crate::error::FieldError;

/// Range metadata for one planner slider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliderRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub default: f64,
}

/// Default slider ranges keyed by parameter name.
pub fn default_sliders() -> BTreeMap<String, SliderRange> {
    let range = |min, max, step, default| SliderRange { min, max, step, default };
    PlannerParam::ALL
        .into_iter()
        .map(|p| {
            let r = match p {
                PlannerParam::LatentDemand => range(0.0, 2000.0, 10.0, 500.0),
                PlannerParam::ArrivalRate => range(0.0, 2000.0, 10.0, 500.0),
                PlannerParam::RegistrationCapacity => range(0.0, 2000.0, 10.0, 300.0),
                PlannerParam::SpecialNeedsFraction => range(0.0, 1.0, 0.01, 0.2),
                PlannerParam::ExtraShelterRequests => range(0.0, 500.0, 5.0, 20.0),
                PlannerParam::RelocationCapacity => range(0.0, 1000.0, 10.0, 100.0),
            };
            (p.name().to_string(), r)
        })
        .collect()
}

/// Checks slider metadata and that `params` lies inside it.
pub fn check_sliders(
    sliders: &BTreeMap<String, SliderRange>,
    params: &ScenarioParams,
) -> Vec<FieldError> {
    let mut out = Vec::new();
    let mut err = |path: String, message: String| out.push(FieldError { path, message });
    for (name, r) in sliders {
        let path = format!("sliders.{name}");
        let Ok(param) = name.parse::<PlannerParam>() else {
            err(path, format!("unknown parameter `{name}`"));
            continue;
        };
        if ![r.min, r.max, r.step, r.default].iter().all(|v| v.is_finite()) {
            err(path, "range values must be finite".into());
            continue;
        }
        if !(r.min <= r.default && r.default <= r.max) || r.step <= 0.0 {
            err(path, format!("need min <= default <= max and step > 0, got {r:?}"));
            continue;
        }
        for bound in [r.min, r.max] {
            if let Err(e) = param.check(bound) {
                err(path.clone(), e.to_string());
            }
        }
        let value = params.get(param);
        if !(r.min..=r.max).contains(&value) {
            err(
                format!("params.{name}"),
                format!("{value} lies outside the slider range [{}, {}]", r.min, r.max),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub id: String,
    pub name: String,
    pub params: ScenarioParams,
    pub initial: Occupancy,
    pub sliders: BTreeMap<String, SliderRange>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewScenario {
    pub name: String,
    pub params: ScenarioParams,
    #[serde(default)]
    pub initial: Occupancy,
    /// Overrides for individual sliders; the rest use the defaults.
    #[serde(default)]
    pub sliders: BTreeMap<String, SliderRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub scenario_id: String,
    /// Key of the stored trace.
    pub trace_ref: String,
    pub rules: Vec<ContingencyRule>,
    pub triggers: Vec<TriggerHit>,
    pub overflow: Option<Overflow>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRun {
    pub record: RunRecord,
    pub trace: SimulationTrace,
}
