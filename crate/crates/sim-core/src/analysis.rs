use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{SimError, SimulationTrace, StageId};

/// Growth rates at or below this are treated as zero when flagging bottlenecks.
pub const GROWTH_EPSILON: f64 = 1e-9;

/// First and worst exceedance of the shelter capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overflow {
    pub first_day: u32,
    pub peak_day: u32,
    /// Largest `sheltered - capacity` over the trace.
    pub peak_exceedance: f64,
}

/// Scans `Sheltered` for occupancy strictly above `capacity`.
///
/// `None` capacity stands for an unbounded shelter system and never overflows.
pub fn shelter_overflow(trace: &SimulationTrace, capacity: Option<f64>) -> Option<Overflow> {
    let capacity = capacity?;
    let mut overflow: Option<Overflow> = None;
    for state in &trace.states {
        let excess = state.get(StageId::Sheltered) - capacity;
        if excess <= 0.0 {
            continue;
        }
        match overflow.as_mut() {
            None => {
                overflow = Some(Overflow {
                    first_day: state.day,
                    peak_day: state.day,
                    peak_exceedance: excess,
                })
            }
            Some(o) if excess > o.peak_exceedance => {
                o.peak_day = state.day;
                o.peak_exceedance = excess;
            }
            Some(_) => {}
        }
    }
    overflow
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub stage: StageId,
    /// Average net growth in persons/day.
    pub growth: f64,
}

/// Non-terminal stages that keep accumulating people, fastest first.
///
/// Growth is averaged over the second half of the trace (days
/// `horizon / 2 ..= horizon`) so the fill-up transient of an initially
/// empty pipeline does not register as a bottleneck.
pub fn bottlenecks(trace: &SimulationTrace) -> Result<Vec<Bottleneck>, SimError> {
    let len = trace.states.len();
    if len < 2 {
        return Err(SimError::TraceTooShort { needed: 2, got: len });
    }
    let end = len - 1;
    let start = end / 2;
    let span = (end - start) as f64;

    let mut out: Vec<Bottleneck> = StageId::ALL
        .into_iter()
        .filter(|s| !s.is_terminal())
        .map(|stage| Bottleneck {
            stage,
            growth: (trace.states[end].get(stage) - trace.states[start].get(stage)) / span,
        })
        .filter(|b| b.growth > GROWTH_EPSILON)
        .collect();
    out.sort_by(|a, b| b.growth.total_cmp(&a.growth).then(a.stage.cmp(&b.stage)));
    Ok(out)
}

fn default_metric() -> StageId {
    StageId::Sheltered
}

/// A contingency-plan condition: fires when `metric` exceeds `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContingencyRule {
    pub id: String,
    #[serde(default = "default_metric")]
    pub metric: StageId,
    pub threshold: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerHit {
    pub rule_id: String,
    pub day: u32,
}

/// First day on which each rule's metric strictly exceeds its threshold.
///
/// Rules that never fire are omitted; output follows rule order.
pub fn evaluate_triggers(
    trace: &SimulationTrace,
    rules: &[ContingencyRule],
) -> Result<Vec<TriggerHit>, SimError> {
    let mut seen = HashSet::new();
    for rule in rules {
        if !seen.insert(rule.id.as_str()) {
            return Err(SimError::DuplicateRule(rule.id.clone()));
        }
        if !(rule.threshold >= 0.0) {
            return Err(SimError::InvalidThreshold {
                id: rule.id.clone(),
                threshold: rule.threshold,
            });
        }
    }

    Ok(rules
        .iter()
        .filter_map(|rule| {
            trace
                .states
                .iter()
                .find(|s| s.get(rule.metric) > rule.threshold)
                .map(|s| TriggerHit {
                    rule_id: rule.id.clone(),
                    day: s.day,
                })
        })
        .collect())
}
