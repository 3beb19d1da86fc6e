//! Per-decision explanations, assembled purely by looking up trace events.

use serde::{Deserialize, Serialize};

use crate::audit::trace::{AuditTrace, EventBody};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub index: usize,
    pub actions: Vec<String>,
    pub g: f64,
    pub risk_per_step: Vec<f64>,
    pub ambiguity_per_step: Vec<f64>,
    pub posterior: f64,
}

impl PolicySummary {
    pub fn risk(&self) -> f64 {
        self.risk_per_step.iter().sum()
    }

    pub fn ambiguity(&self) -> f64 {
        self.ambiguity_per_step.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionState {
    pub level: usize,
    /// Attentional posterior of the level above, labeled by its states.
    /// `None` for the top level.
    pub attention: Option<Vec<LabeledValue>>,
    pub gamma: f64,
}

impl PrecisionState {
    /// Most probable attentional state; ties go to the first.
    pub fn attended(&self) -> Option<&LabeledValue> {
        let attention = self.attention.as_ref()?;
        let mut best = attention.first()?;
        for v in attention {
            if v.value > best.value {
                best = v;
            }
        }
        Some(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub step: usize,
    pub chosen_action: usize,
    pub chosen_action_label: String,
    pub action_marginals: Vec<LabeledValue>,
    /// Every evaluated policy, lowest `G` first.
    pub top_policies: Vec<PolicySummary>,
    pub best_policy: usize,
    /// Posterior probability of the best policy starting with the chosen action.
    pub confidence: f64,
    /// Entropy of the policy posterior, in nats.
    pub policy_entropy: f64,
    /// One entry per level that updated at this step, lowest level first.
    pub precision_state: Vec<PrecisionState>,
}

fn labeled(labels: &[String], values: &[f64]) -> Vec<LabeledValue> {
    labels
        .iter()
        .zip(values)
        .map(|(label, &value)| LabeledValue {
            label: label.clone(),
            value,
        })
        .collect()
}

/// Builds the explanation of the overt decision taken at `step`.
pub fn explain_step(trace: &AuditTrace, step: usize) -> Result<Explanation> {
    let events: Vec<_> = trace.events_at(step).collect();
    if events.is_empty() {
        return Err(Error::StepNotFound(step));
    }
    let levels = &trace.header.levels;

    let mut decision = None;
    let mut policies = Vec::new();
    let mut precision_state = Vec::new();
    for event in &events {
        let header = &levels[event.level - 1];
        match &event.body {
            EventBody::PolicyPosterior {
                marginals,
                action,
                best_policy,
                confidence,
                entropy,
                ..
            } => decision = Some((marginals, *action, *best_policy, *confidence, *entropy)),
            EventBody::PolicyEval {
                policy,
                actions,
                g,
                risk,
                ambiguity,
                posterior,
                ..
            } => policies.push(PolicySummary {
                index: *policy,
                actions: actions.iter().map(|&a| header.actions[a].clone()).collect(),
                g: *g,
                risk_per_step: risk.clone(),
                ambiguity_per_step: ambiguity.clone(),
                posterior: *posterior,
            }),
            EventBody::PrecisionDescend {
                attention, gamma, ..
            } => {
                let attention = attention
                    .as_ref()
                    .map(|a| labeled(&levels[event.level].states, a));
                precision_state.push(PrecisionState {
                    level: event.level,
                    attention,
                    gamma: *gamma,
                });
            }
            _ => {}
        }
    }
    let (marginals, action, best_policy, confidence, policy_entropy) =
        decision.ok_or(Error::NoPlanningAtStep(step))?;
    let actions = &levels[0].actions;
    policies.sort_by(|a, b| a.g.total_cmp(&b.g).then(a.index.cmp(&b.index)));
    precision_state.sort_by_key(|p| p.level);

    Ok(Explanation {
        step,
        chosen_action: action,
        chosen_action_label: actions[action].clone(),
        action_marginals: labeled(actions, marginals),
        top_policies: policies,
        best_policy,
        confidence,
        policy_entropy,
        precision_state,
    })
}
