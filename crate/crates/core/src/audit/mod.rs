//! The explainability surface: traces, explanations, reports and replay.

pub mod explain;
pub mod report;
pub mod trace;

pub use explain::{explain_step, Explanation, LabeledValue, PolicySummary, PrecisionState};
pub use report::{fmt_sig, render_explanation, render_report, Verbosity};
pub use trace::{
    export_trace, import_trace, spec_hash, AuditTrace, EventBody, EventRecord, LevelHeader,
    TraceEvent, TraceHeader,
};

use crate::error::{Error, Result};
use crate::hierarchy::run_episode;

/// Re-runs the episode described by the trace header.
pub fn replay(trace: &AuditTrace) -> Result<AuditTrace> {
    let h = &trace.header;
    let hash = spec_hash(&h.agent_spec)?;
    if hash != h.spec_hash {
        return Err(Error::ReplayMismatch(format!(
            "header spec hash {} does not match embedded spec ({hash})",
            h.spec_hash
        )));
    }
    let mut agent = h.agent_spec.build()?;
    let mut process = h.process_spec.build()?;
    run_episode(&mut agent, &mut process, h.steps, h.seed)
}

/// Replays the trace and checks that the header and every event match
/// exactly. Reports the first differing sequence number.
pub fn verify_replay(trace: &AuditTrace) -> Result<()> {
    let fresh = replay(trace)?;
    if fresh.header != trace.header {
        return Err(Error::ReplayMismatch(
            "header differs from replayed header".into(),
        ));
    }
    for (recorded, replayed) in trace.events.iter().zip(&fresh.events) {
        if recorded != replayed {
            return Err(Error::ReplayMismatch(format!(
                "event {} differs from replay",
                recorded.sequence_no
            )));
        }
    }
    if trace.events.len() != fresh.events.len() {
        return Err(Error::ReplayMismatch(format!(
            "trace has {} events, replay produced {}",
            trace.events.len(),
            fresh.events.len()
        )));
    }
    Ok(())
}
