//! Daily-step compartmental model of a border-crossing pipeline.
//!
//! People enter a `WantToLeave` pool, arrive at the border, are registered,
//! and are then either sheltered (special-needs cases) or settle on their own.
//! Sheltered people are relocated subject to a daily relocation capacity.
//! Every flow between stages is capped by a planner-controlled rate, and a
//! person advances at most one stage per day.
//!
//! All functions are pure: identical inputs produce bit-identical traces.

mod analysis;
mod engine;
mod error;
pub mod export;
mod params;
pub mod scenario;
mod stage;
mod sweep;

pub use analysis::{
    bottlenecks, evaluate_triggers, shelter_overflow, Bottleneck, ContingencyRule, Overflow,
    TriggerHit, GROWTH_EPSILON,
};
pub use engine::{simulate, step, Edge, FlowRecord, PipelineState, SimulationTrace};
pub use error::SimError;
pub use params::{PlannerParam, ScenarioParams};
pub use stage::{Occupancy, StageId};
pub use sweep::{sensitivity_sweep, snapshot_at, SweepResult, SweepSeries};
