use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A stage of the border-crossing pipeline, in left-to-right order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageId {
    WantToLeave,
    AtBorder,
    Processing,
    Sheltered,
    Relocated,
    SelfSettled,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::WantToLeave,
        StageId::AtBorder,
        StageId::Processing,
        StageId::Sheltered,
        StageId::Relocated,
        StageId::SelfSettled,
    ];

    /// Terminal stages have no outgoing flow.
    pub fn is_terminal(self) -> bool {
        matches!(self, StageId::Relocated | StageId::SelfSettled)
    }

    pub fn name(self) -> &'static str {
        match self {
            StageId::WantToLeave => "WantToLeave",
            StageId::AtBorder => "AtBorder",
            StageId::Processing => "Processing",
            StageId::Sheltered => "Sheltered",
            StageId::Relocated => "Relocated",
            StageId::SelfSettled => "SelfSettled",
        }
    }

    /// Key used for initial occupancies in scenario files.
    pub fn snake_name(self) -> &'static str {
        match self {
            StageId::WantToLeave => "want_to_leave",
            StageId::AtBorder => "at_border",
            StageId::Processing => "processing",
            StageId::Sheltered => "sheltered",
            StageId::Relocated => "relocated",
            StageId::SelfSettled => "self_settled",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StageId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageId::ALL
            .into_iter()
            .find(|stage| stage.name() == s || stage.snake_name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Persons per stage. Values are non-negative reals; rounding is a display concern.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occupancy {
    #[serde(rename = "WantToLeave", default)]
    pub want_to_leave: f64,
    #[serde(rename = "AtBorder", default)]
    pub at_border: f64,
    #[serde(rename = "Processing", default)]
    pub processing: f64,
    #[serde(rename = "Sheltered", default)]
    pub sheltered: f64,
    #[serde(rename = "Relocated", default)]
    pub relocated: f64,
    #[serde(rename = "SelfSettled", default)]
    pub self_settled: f64,
}

impl Occupancy {
    /// Sum over all pools, compensated so mass-balance checks see only
    /// the rounding of the moves themselves.
    pub fn total(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for stage in StageId::ALL {
            let x = self[stage];
            let t = sum + x;
            if sum.abs() >= x.abs() {
                carry += (sum - t) + x;
            } else {
                carry += (x - t) + sum;
            }
            sum = t;
        }
        sum + carry
    }

    pub fn iter(&self) -> impl Iterator<Item = (StageId, f64)> + '_ {
        StageId::ALL.into_iter().map(move |s| (s, self[s]))
    }
}

impl Index<StageId> for Occupancy {
    type Output = f64;

    fn index(&self, stage: StageId) -> &f64 {
        match stage.index() {
            0 => &self.want_to_leave,
            1 => &self.at_border,
            2 => &self.processing,
            3 => &self.sheltered,
            4 => &self.relocated,
            _ => &self.self_settled,
        }
    }
}

impl IndexMut<StageId> for Occupancy {
    fn index_mut(&mut self, stage: StageId) -> &mut f64 {
        match stage.index() {
            0 => &mut self.want_to_leave,
            1 => &mut self.at_border,
            2 => &mut self.processing,
            3 => &mut self.sheltered,
            4 => &mut self.relocated,
            _ => &mut self.self_settled,
        }
    }
}
