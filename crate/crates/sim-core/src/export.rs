//! Tabular trace export.
//!
//! Numbers are written in the shortest round-trip form, the same text
//! `serde_json` emits for an `f64`, so CSV and JSON outputs can be compared
//! byte for byte.

use std::io::{self, Write};

use crate::SimulationTrace;

/// Shortest round-trip decimal form of a finite `f64` (`200.0`, `0.1`, `1e-7`).
pub fn format_number(value: f64) -> String {
    if value.is_finite() {
        serde_json::to_string(&value).expect("finite f64 serializes")
    } else {
        // Pools are validated finite; never reached for a valid trace.
        value.to_string()
    }
}

/// Writes `day,stage,occupancy` rows, six per day in stage order.
pub fn write_occupancy_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "day,stage,occupancy")?;
    for state in &trace.states {
        for (stage, value) in state.occupancy.iter() {
            writeln!(out, "{},{},{}", state.day, stage, format_number(value))?;
        }
    }
    out.flush()
}

/// Writes `day,from,to,amount` rows in step evaluation order.
pub fn write_flows_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "day,from,to,amount")?;
    for flow in &trace.flows {
        writeln!(out, "{},{},{},{}", flow.day, flow.from(), flow.to(), format_number(flow.amount))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{simulate, PipelineState, ScenarioParams};

    #[test]
    fn number_format_matches_json() {
        for v in [0.0, 200.0, 0.1, 1.0 / 3.0, 1e-7, 123456789.125, 1e22] {
            assert_eq!(format_number(v), serde_json::to_string(&v).unwrap());
        }
    }

    #[test]
    fn occupancy_rows_shape() {
        let params = ScenarioParams { horizon: 4, latent_demand: 1.5, ..Default::default() };
        let trace = simulate(&PipelineState::default(), &params).unwrap();
        let mut buf = Vec::new();
        write_occupancy_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 5 * 6);
        assert_eq!(lines[1], "0,WantToLeave,0.0");
        assert_eq!(lines[7], "1,WantToLeave,1.5");

        let mut buf = Vec::new();
        write_flows_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 5);
        assert_eq!(text.lines().nth(1).unwrap(), "1,Sheltered,Relocated,0.0");
    }
}
