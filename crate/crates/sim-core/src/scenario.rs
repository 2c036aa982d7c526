//! Flat key/value scenario files (TOML).
//!
//! ```toml
//! latent_demand = 1000.0
//! arrival_rate = 500.0
//! registration_capacity = 300.0
//! special_needs_fraction = 0.2
//! extra_shelter_requests = 10.0
//! relocation_capacity = 80.0
//! shelter_capacity = 5000.0   # optional
//! horizon = 60
//! at_border = 300.0           # optional initial occupancies, snake_case stage names
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Occupancy, PipelineState, ScenarioParams, SimError};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    latent_demand: f64,
    arrival_rate: f64,
    registration_capacity: f64,
    special_needs_fraction: f64,
    extra_shelter_requests: f64,
    relocation_capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shelter_capacity: Option<f64>,
    horizon: u32,
    #[serde(default)]
    want_to_leave: f64,
    #[serde(default)]
    at_border: f64,
    #[serde(default)]
    processing: f64,
    #[serde(default)]
    sheltered: f64,
    #[serde(default)]
    relocated: f64,
    #[serde(default)]
    self_settled: f64,
}

/// A scenario together with its starting occupancies.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub initial: PipelineState,
}

impl Scenario {
    /// Parses and validates a scenario document. Unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self, ScenarioFileError> {
        let file: ScenarioFile = toml::from_str(text)?;
        let scenario = Scenario {
            params: ScenarioParams {
                latent_demand: file.latent_demand,
                arrival_rate: file.arrival_rate,
                registration_capacity: file.registration_capacity,
                special_needs_fraction: file.special_needs_fraction,
                extra_shelter_requests: file.extra_shelter_requests,
                relocation_capacity: file.relocation_capacity,
                shelter_capacity: file.shelter_capacity,
                horizon: file.horizon,
            },
            initial: PipelineState::new(Occupancy {
                want_to_leave: file.want_to_leave,
                at_border: file.at_border,
                processing: file.processing,
                sheltered: file.sheltered,
                relocated: file.relocated,
                self_settled: file.self_settled,
            }),
        };
        scenario.params.validate()?;
        scenario.initial.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let o = &self.initial.occupancy;
        let file = ScenarioFile {
            latent_demand: p.latent_demand,
            arrival_rate: p.arrival_rate,
            registration_capacity: p.registration_capacity,
            special_needs_fraction: p.special_needs_fraction,
            extra_shelter_requests: p.extra_shelter_requests,
            relocation_capacity: p.relocation_capacity,
            shelter_capacity: p.shelter_capacity,
            horizon: p.horizon,
            want_to_leave: o.want_to_leave,
            at_border: o.at_border,
            processing: o.processing,
            sheltered: o.sheltered,
            relocated: o.relocated,
            self_settled: o.self_settled,
        };
        toml::to_string(&file).expect("flat scenario always serializes")
    }
}
