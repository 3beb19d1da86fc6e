//! Deterministic plain-text self-reports rendered from a trace.

use std::fmt::Write;

use crate::audit::explain::{explain_step, Explanation, PrecisionState};
use crate::audit::trace::{AuditTrace, EventBody, TraceEvent};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verbosity {
    /// One line per step.
    Summary,
    /// Adds policies with their risk/ambiguity split and precision state.
    Decision,
    /// Adds every observation, prior, posterior and free energy.
    Full,
}

/// Policies listed per step at `Decision` verbosity and above.
pub const POLICIES_SHOWN: usize = 5;

/// Formats `x` with 7 significant digits, switching to scientific notation
/// outside `[1e-4, 1e7)`.
pub fn fmt_sig(x: f64) -> String {
    const SIG: i32 = 7;
    if x == 0.0 {
        return format!("{:.*}", (SIG - 1) as usize, 0.0);
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..7).contains(&exp) {
        return format!("{:.*e}", (SIG - 1) as usize, x);
    }
    let decimals = (SIG - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (9.9999999 -> 10.000000).
    let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant > SIG as usize && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn fmt_dist(labels: &[String], values: &[f64]) -> String {
    let parts: Vec<String> = labels
        .iter()
        .zip(values)
        .map(|(l, &v)| format!("{l} {}", fmt_sig(v)))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn precision_line(p: &PrecisionState) -> String {
    match p.attended() {
        Some(att) => format!(
            "  level {} precision: attention was {} ({}), likelihood precision {}",
            p.level,
            att.label,
            fmt_sig(att.value),
            fmt_sig(p.gamma)
        ),
        None => format!(
            "  level {} precision: native, likelihood precision {}",
            p.level,
            fmt_sig(p.gamma)
        ),
    }
}

fn summary_line(ex: &Explanation) -> String {
    format!(
        "step {}: chose '{}' with confidence {} (policy entropy {} nats)",
        ex.step,
        ex.chosen_action_label,
        fmt_sig(ex.confidence),
        fmt_sig(ex.policy_entropy)
    )
}

fn decision_lines(out: &mut String, ex: &Explanation) {
    let marginals: Vec<String> = ex
        .action_marginals
        .iter()
        .map(|m| format!("{} {}", m.label, fmt_sig(m.value)))
        .collect();
    let _ = writeln!(out, "  action marginals: {}", marginals.join(", "));
    let shown = ex.top_policies.len().min(POLICIES_SHOWN);
    let _ = writeln!(
        out,
        "  policies, lowest G first ({shown} of {}):",
        ex.top_policies.len()
    );
    for p in &ex.top_policies[..shown] {
        let _ = writeln!(
            out,
            "    #{} [{}]: G {} = risk {} + ambiguity {}, posterior {}",
            p.index,
            p.actions.join(", "),
            fmt_sig(p.g),
            fmt_sig(p.risk()),
            fmt_sig(p.ambiguity()),
            fmt_sig(p.posterior)
        );
    }
    for p in &ex.precision_state {
        let _ = writeln!(out, "{}", precision_line(p));
    }
}

fn full_lines(out: &mut String, trace: &AuditTrace, events: &[&TraceEvent]) {
    let levels = &trace.header.levels;
    for e in events {
        let h = &levels[e.level - 1];
        let line = match &e.body {
            EventBody::Observation { dist } => {
                format!(
                    "level {} observation: {}",
                    e.level,
                    fmt_dist(&h.outcomes, dist)
                )
            }
            EventBody::Ascend { dist } => {
                format!(
                    "level {} ascended data: {}",
                    e.level,
                    fmt_dist(&h.outcomes, dist)
                )
            }
            EventBody::Prior { dist } => {
                format!("level {} prior: {}", e.level, fmt_dist(&h.states, dist))
            }
            EventBody::Posterior { dist } => {
                format!("level {} posterior: {}", e.level, fmt_dist(&h.states, dist))
            }
            EventBody::Vfe { value } => {
                format!("level {} free energy: {} nats", e.level, fmt_sig(*value))
            }
            EventBody::ProcessTruth { state, phase } => {
                let label = trace
                    .header
                    .process_states
                    .get(*state)
                    .map_or("?", String::as_str);
                match phase {
                    Some(p) => format!("true state: '{label}' (phase {p})"),
                    None => format!("true state: '{label}'"),
                }
            }
            _ => continue,
        };
        let _ = writeln!(out, "  {line}");
    }
}

/// Renders the trace as text. The same trace and verbosity always give
/// byte-identical output.
pub fn render_report(trace: &AuditTrace, verbosity: Verbosity) -> String {
    let h = &trace.header;
    let mut out = String::new();
    let _ = writeln!(out, "audit report: {}", h.agent_spec.name);
    let _ = writeln!(
        out,
        "spec sha256 {}, seed {}, {} steps, {} levels",
        h.spec_hash,
        h.seed,
        h.steps,
        h.levels.len()
    );
    for (i, l) in h.levels.iter().enumerate() {
        let _ = writeln!(
            out,
            "level {} '{}': {} states, {} outcomes, {} actions, {} policies (horizon {})",
            i + 1,
            l.name,
            l.states.len(),
            l.outcomes.len(),
            l.actions.len(),
            l.policies,
            l.horizon
        );
    }
    for step in trace.steps() {
        match explain_step(trace, step) {
            Ok(ex) => {
                let _ = writeln!(out, "{}", summary_line(&ex));
                if verbosity >= Verbosity::Decision {
                    decision_lines(&mut out, &ex);
                }
            }
            Err(Error::NoPlanningAtStep(_)) => {
                let _ = writeln!(out, "step {step}: no overt decision");
            }
            Err(_) => continue,
        }
        if verbosity >= Verbosity::Full {
            let events: Vec<_> = trace.events_at(step).collect();
            full_lines(&mut out, trace, &events);
        }
    }
    out
}

/// Renders a single step's explanation at `Decision` detail.
pub fn render_explanation(ex: &Explanation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", summary_line(ex));
    decision_lines(&mut out, ex);
    out
}
