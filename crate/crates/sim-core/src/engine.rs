use serde::{Deserialize, Serialize};

use crate::{Occupancy, ScenarioParams, SimError, StageId};

/// Pipeline occupancy at the end of a day. Day 0 is the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineState {
    pub day: u32,
    pub occupancy: Occupancy,
}

impl PipelineState {
    pub fn new(occupancy: Occupancy) -> Self {
        PipelineState { day: 0, occupancy }
    }

    pub fn get(&self, stage: StageId) -> f64 {
        self.occupancy[stage]
    }

    /// Every pool must be finite and non-negative.
    pub fn validate(&self) -> Result<(), SimError> {
        for (stage, value) in self.occupancy.iter() {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::StateCorruption { stage, value });
            }
        }
        Ok(())
    }
}

/// A directed stage-to-stage transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Relocation,
    ShelterIntake,
    SelfSettlement,
    Registration,
    Arrival,
}

impl Edge {
    /// In evaluation order within a step.
    pub const ALL: [Edge; 5] = [
        Edge::Relocation,
        Edge::ShelterIntake,
        Edge::SelfSettlement,
        Edge::Registration,
        Edge::Arrival,
    ];

    pub fn endpoints(self) -> (StageId, StageId) {
        match self {
            Edge::Relocation => (StageId::Sheltered, StageId::Relocated),
            Edge::ShelterIntake => (StageId::Processing, StageId::Sheltered),
            Edge::SelfSettlement => (StageId::Processing, StageId::SelfSettled),
            Edge::Registration => (StageId::AtBorder, StageId::Processing),
            Edge::Arrival => (StageId::WantToLeave, StageId::AtBorder),
        }
    }

    pub fn from(self) -> StageId {
        self.endpoints().0
    }

    pub fn to(self) -> StageId {
        self.endpoints().1
    }

    /// The daily cap governing this edge; `None` when only the source pool limits it.
    pub fn capacity(self, params: &ScenarioParams) -> Option<f64> {
        match self {
            Edge::Relocation => Some(params.relocation_capacity),
            Edge::Registration => Some(params.registration_capacity),
            Edge::Arrival => Some(params.arrival_rate),
            Edge::ShelterIntake | Edge::SelfSettlement => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// The day at whose end the move is reflected.
    pub day: u32,
    pub edge: Edge,
    pub amount: f64,
}

impl FlowRecord {
    pub fn from(&self) -> StageId {
        self.edge.from()
    }

    pub fn to(&self) -> StageId {
        self.edge.to()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// `horizon + 1` states; `states[t].day == t`.
    pub states: Vec<PipelineState>,
    pub flows: Vec<FlowRecord>,
}

impl SimulationTrace {
    pub fn horizon(&self) -> u32 {
        self.states.last().map_or(0, |s| s.day)
    }

    /// Occupancy series of one stage, indexed by day.
    pub fn series(&self, stage: StageId) -> Vec<f64> {
        self.states.iter().map(|s| s.get(stage)).collect()
    }

    pub fn flows_on(&self, edge: Edge) -> impl Iterator<Item = &FlowRecord> + '_ {
        self.flows.iter().filter(move |f| f.edge == edge)
    }
}

/// Advances the pipeline by one day.
///
/// Flows are evaluated right to left so nobody moves more than one stage:
/// relocation, then the processing split, registration, arrivals, and
/// finally the exogenous inflows (latent demand and extra shelter requests).
pub fn step(
    state: &PipelineState,
    params: &ScenarioParams,
) -> Result<(PipelineState, Vec<FlowRecord>), SimError> {
    params.validate()?;
    state.validate()?;

    let mut occ = state.occupancy;
    let day = state.day + 1;
    let mut flows = Vec::with_capacity(Edge::ALL.len());
    let mut push = |edge: Edge, amount: f64| flows.push(FlowRecord { day, edge, amount });

    let relocated = params.relocation_capacity.min(occ.sheltered);
    occ.sheltered -= relocated;
    occ.relocated += relocated;
    push(Edge::Relocation, relocated);

    // Processing dwell is one day: the whole pool leaves.
    let processed = occ.processing;
    let to_shelter = processed * params.special_needs_fraction;
    let to_self = processed - to_shelter;
    occ.processing = 0.0;
    occ.sheltered += to_shelter;
    occ.self_settled += to_self;
    push(Edge::ShelterIntake, to_shelter);
    push(Edge::SelfSettlement, to_self);

    let registered = params.registration_capacity.min(occ.at_border);
    occ.at_border -= registered;
    occ.processing += registered;
    push(Edge::Registration, registered);

    let arrived = params.arrival_rate.min(occ.want_to_leave);
    occ.want_to_leave -= arrived;
    occ.at_border += arrived;
    push(Edge::Arrival, arrived);

    occ.want_to_leave += params.latent_demand;
    occ.sheltered += params.extra_shelter_requests;

    let next = PipelineState { day, occupancy: occ };
    next.validate()?;
    Ok((next, flows))
}

/// Iterates [`step`] for `params.horizon` days.
pub fn simulate(initial: &PipelineState, params: &ScenarioParams) -> Result<SimulationTrace, SimError> {
    params.validate()?;
    initial.validate()?;

    let horizon = params.horizon as usize;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut flows = Vec::with_capacity(horizon * Edge::ALL.len());
    let mut current = *initial;
    states.push(current);
    for _ in 0..horizon {
        let (next, day_flows) = step(&current, params)?;
        flows.extend(day_flows);
        states.push(next);
        current = next;
    }
    Ok(SimulationTrace { states, flows })
}
