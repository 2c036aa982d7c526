use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Planner-controlled scenario. Rates are persons/day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Added to `WantToLeave` each day.
    pub latent_demand: f64,
    /// Cap on `WantToLeave -> AtBorder`.
    pub arrival_rate: f64,
    /// Cap on `AtBorder -> Processing`.
    pub registration_capacity: f64,
    /// Share of processed people that enter shelters.
    pub special_needs_fraction: f64,
    /// Added directly to `Sheltered` each day.
    pub extra_shelter_requests: f64,
    /// Cap on `Sheltered -> Relocated`.
    pub relocation_capacity: f64,
    /// Reporting threshold for shelter occupancy. `None` means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shelter_capacity: Option<f64>,
    /// Number of simulated days.
    pub horizon: u32,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            latent_demand: 0.0,
            arrival_rate: 0.0,
            registration_capacity: 0.0,
            special_needs_fraction: 0.0,
            extra_shelter_requests: 0.0,
            relocation_capacity: 0.0,
            shelter_capacity: None,
            horizon: 1,
        }
    }
}

impl ScenarioParams {
    /// Checks every field against its domain, reporting the first violation.
    pub fn validate(&self) -> Result<(), SimError> {
        match self.violations().into_iter().next() {
            Some(err) => Err(err),
            None => Ok(()),
        }
    }

    /// All domain violations, one per offending field.
    pub fn violations(&self) -> Vec<SimError> {
        let mut out = Vec::new();
        for param in PlannerParam::ALL {
            if let Err(err) = param.check(self.get(param)) {
                out.push(err);
            }
        }
        if let Some(cap) = self.shelter_capacity {
            if !cap.is_finite() || cap < 0.0 {
                out.push(SimError::domain(
                    "shelter_capacity",
                    format!("must be a finite value >= 0, got {cap}"),
                ));
            }
        }
        if self.horizon < 1 {
            out.push(SimError::domain("horizon", "must be >= 1"));
        }
        out
    }

    pub fn get(&self, param: PlannerParam) -> f64 {
        match param {
            PlannerParam::LatentDemand => self.latent_demand,
            PlannerParam::ArrivalRate => self.arrival_rate,
            PlannerParam::RegistrationCapacity => self.registration_capacity,
            PlannerParam::SpecialNeedsFraction => self.special_needs_fraction,
            PlannerParam::ExtraShelterRequests => self.extra_shelter_requests,
            PlannerParam::RelocationCapacity => self.relocation_capacity,
        }
    }

    pub fn set(&mut self, param: PlannerParam, value: f64) {
        let slot = match param {
            PlannerParam::LatentDemand => &mut self.latent_demand,
            PlannerParam::ArrivalRate => &mut self.arrival_rate,
            PlannerParam::RegistrationCapacity => &mut self.registration_capacity,
            PlannerParam::SpecialNeedsFraction => &mut self.special_needs_fraction,
            PlannerParam::ExtraShelterRequests => &mut self.extra_shelter_requests,
            PlannerParam::RelocationCapacity => &mut self.relocation_capacity,
        };
        *slot = value;
    }

    /// Copy of `self` with one planner parameter replaced.
    pub fn with(&self, param: PlannerParam, value: f64) -> Self {
        let mut out = self.clone();
        out.set(param, value);
        out
    }
}

/// The six parameters a planner can move with a slider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerParam {
    LatentDemand,
    ArrivalRate,
    RegistrationCapacity,
    SpecialNeedsFraction,
    ExtraShelterRequests,
    RelocationCapacity,
}

impl PlannerParam {
    pub const ALL: [PlannerParam; 6] = [
        PlannerParam::LatentDemand,
        PlannerParam::ArrivalRate,
        PlannerParam::RegistrationCapacity,
        PlannerParam::SpecialNeedsFraction,
        PlannerParam::ExtraShelterRequests,
        PlannerParam::RelocationCapacity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerParam::LatentDemand => "latent_demand",
            PlannerParam::ArrivalRate => "arrival_rate",
            PlannerParam::RegistrationCapacity => "registration_capacity",
            PlannerParam::SpecialNeedsFraction => "special_needs_fraction",
            PlannerParam::ExtraShelterRequests => "extra_shelter_requests",
            PlannerParam::RelocationCapacity => "relocation_capacity",
        }
    }

    /// Domain check for a candidate value of this parameter.
    pub fn check(self, value: f64) -> Result<(), SimError> {
        if !value.is_finite() {
            return Err(SimError::domain(self.name(), format!("must be finite, got {value}")));
        }
        match self {
            PlannerParam::SpecialNeedsFraction if !(0.0..=1.0).contains(&value) => Err(
                SimError::domain(self.name(), format!("must lie in [0, 1], got {value}")),
            ),
            _ if value < 0.0 => Err(SimError::domain(
                self.name(),
                format!("rate must be >= 0, got {value}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PlannerParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerParam {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SimError::UnknownParameter(s.to_string()))
    }
}
