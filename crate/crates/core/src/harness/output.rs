//! Trace CSV and decision-log JSONL.

use std::fmt::Write as _;
use std::path::Path;

use crate::harness::runner::{RunReport, TraceRow};
use crate::harness::HarnessError;
use crate::mapek::AdaptationDecision;

pub const TRACE_HEADER: &str = "t,inflow_temp,inflow_rate,setpoint,outflow_temp,power,valve_open,active_option,hazard_accum,hazard_count,guard_tripped,spi_near_limit,case_revision,case_valid";

/// Fixed six-decimal floats, 0/1 booleans, header first.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(96 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{},{},{},{},{}",
            r.t,
            r.inflow_temp,
            r.inflow_rate,
            r.setpoint,
            r.outflow_temp,
            r.power,
            u8::from(r.valve_open),
            r.active_option,
            r.hazard_accum,
            r.hazard_count,
            u8::from(r.guard_tripped),
            u8::from(r.spi_near_limit),
            r.case_revision,
            u8::from(r.case_valid),
        );
    }
    out
}

/// One JSON object per line.
pub fn decision_log(decisions: &[AdaptationDecision]) -> String {
    decisions
        .iter()
        .map(|d| serde_json::to_string(d).expect("decision serializes") + "\n")
        .collect()
}

/// Writes the trace, the report and optionally the decision log.
pub fn write_outputs(
    rows: &[TraceRow],
    report: &RunReport,
    trace_path: &Path,
    report_path: &Path,
    decisions_path: Option<&Path>,
) -> Result<(), HarnessError> {
    std::fs::write(trace_path, trace_csv(rows)).map_err(|e| HarnessError::io(trace_path, e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(report_path, json + "\n").map_err(|e| HarnessError::io(report_path, e))?;
    if let Some(p) = decisions_path {
        std::fs::write(p, decision_log(&report.decisions)).map_err(|e| HarnessError::io(p, e))?;
    }
    Ok(())
}
