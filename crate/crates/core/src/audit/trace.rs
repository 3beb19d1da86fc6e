//! Append-only audit traces and their JSON file format.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spec::{ModelSpec, ProcessSpec};

pub const TRACE_FORMAT: &str = "aifx-trace/1";

/// Kind-specific event payloads. Serialized as `"kind"` plus `"payload"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    /// Sensory data at level 1.
    Observation {
        dist: Vec<f64>,
    },
    /// Belief before this step's data.
    Prior {
        dist: Vec<f64>,
    },
    Posterior {
        dist: Vec<f64>,
    },
    /// Variational free energy of the posterior.
    Vfe {
        value: f64,
    },
    /// Likelihood precision used at this level. `attention` and `map` are
    /// absent for the top level, which uses its native precision.
    PrecisionDescend {
        attention: Option<Vec<f64>>,
        map: Option<Vec<f64>>,
        gamma: f64,
    },
    /// Posterior of the level below, received as data.
    Ascend {
        dist: Vec<f64>,
    },
    PolicyEval {
        policy: usize,
        actions: Vec<usize>,
        g: f64,
        risk: Vec<f64>,
        ambiguity: Vec<f64>,
        f: f64,
        posterior: f64,
    },
    PolicyPosterior {
        probs: Vec<f64>,
        marginals: Vec<f64>,
        action: usize,
        best_policy: usize,
        confidence: f64,
        entropy: f64,
    },
    Action {
        action: usize,
    },
    /// Ground truth from the simulator; never produced by the agent itself.
    ProcessTruth {
        state: usize,
        phase: Option<String>,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Observation { .. } => "observation",
            EventBody::Prior { .. } => "prior",
            EventBody::Posterior { .. } => "posterior",
            EventBody::Vfe { .. } => "vfe",
            EventBody::PrecisionDescend { .. } => "precision_descend",
            EventBody::Ascend { .. } => "ascend",
            EventBody::PolicyEval { .. } => "policy_eval",
            EventBody::PolicyPosterior { .. } => "policy_posterior",
            EventBody::Action { .. } => "action",
            EventBody::ProcessTruth { .. } => "process_truth",
        }
    }
}

/// An event not yet assigned a place in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub step: usize,
    pub level: usize,
    pub body: EventBody,
}

impl EventRecord {
    pub fn new(step: usize, level: usize, body: EventBody) -> Self {
        Self { step, level, body }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub sequence_no: u64,
    pub step: usize,
    pub level: usize,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Dimensions and labels of one level, as recorded in the trace header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelHeader {
    pub name: String,
    pub states: Vec<String>,
    pub outcomes: Vec<String>,
    pub actions: Vec<String>,
    pub horizon: usize,
    pub policies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    /// SHA-256 of the compact JSON encoding of `agent_spec`.
    pub spec_hash: String,
    pub seed: u64,
    pub steps: usize,
    pub levels: Vec<LevelHeader>,
    pub process_states: Vec<String>,
    pub agent_spec: ModelSpec,
    pub process_spec: ProcessSpec,
}

pub fn spec_hash(spec: &ModelSpec) -> Result<String> {
    let bytes = serde_json::to_vec(spec).map_err(|e| Error::Parse {
        offset: 0,
        reason: e.to_string(),
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl TraceHeader {
    pub fn new(agent: &ModelSpec, process: &ProcessSpec, seed: u64, steps: usize) -> Result<Self> {
        let levels = agent
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let actions = l.action_labels();
                let horizon = l.horizon.unwrap_or(1);
                LevelHeader {
                    name: l.name.clone().unwrap_or_else(|| format!("level {}", i + 1)),
                    states: l.states.clone(),
                    outcomes: l.outcomes.clone(),
                    policies: actions.len().pow(horizon as u32),
                    actions,
                    horizon,
                }
            })
            .collect();
        Ok(Self {
            format: TRACE_FORMAT.to_string(),
            spec_hash: spec_hash(agent)?,
            seed,
            steps,
            levels,
            process_states: process.states.clone(),
            agent_spec: agent.clone(),
            process_spec: process.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

fn expect_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::dim(what, expected, found))
    }
}

fn expect_below(what: &'static str, bound: usize, value: usize) -> Result<()> {
    if value < bound {
        Ok(())
    } else {
        Err(Error::dim(what, bound, value))
    }
}

impl AuditTrace {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            header,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Appends `event` with the next sequence number and returns that number.
    pub fn record(&mut self, event: EventRecord) -> Result<u64> {
        self.check_event(event.step, event.level, &event.body)?;
        if let Some(last) = self.events.last() {
            if event.step < last.step {
                return Err(Error::Sequence(format!(
                    "step {} recorded after step {}",
                    event.step, last.step
                )));
            }
        }
        let sequence_no = self.events.len() as u64;
        self.events.push(TraceEvent {
            sequence_no,
            step: event.step,
            level: event.level,
            body: event.body,
        });
        Ok(sequence_no)
    }

    /// Checks an event's level and payload dimensions against the header.
    pub fn check_event(&self, step: usize, level: usize, body: &EventBody) -> Result<()> {
        if step == 0 {
            return Err(Error::Sequence("steps are numbered from 1".into()));
        }
        let levels = &self.header.levels;
        if level == 0 || level > levels.len() {
            return Err(Error::dim("event level", levels.len(), level));
        }
        let h = &levels[level - 1];
        match body {
            EventBody::Observation { dist } | EventBody::Ascend { dist } => {
                expect_len("outcome distribution", h.outcomes.len(), dist.len())
            }
            EventBody::Prior { dist } | EventBody::Posterior { dist } => {
                expect_len("state distribution", h.states.len(), dist.len())
            }
            EventBody::Vfe { .. } => Ok(()),
            EventBody::PrecisionDescend { attention, map, .. } => match levels.get(level) {
                Some(above) => {
                    let n = above.states.len();
                    expect_len(
                        "attentional posterior",
                        n,
                        attention.as_ref().map_or(0, Vec::len),
                    )?;
                    expect_len("precision map", n, map.as_ref().map_or(0, Vec::len))
                }
                None => {
                    expect_len(
                        "attentional posterior",
                        0,
                        attention.as_ref().map_or(0, Vec::len),
                    )?;
                    expect_len("precision map", 0, map.as_ref().map_or(0, Vec::len))
                }
            },
            EventBody::PolicyEval {
                policy,
                actions,
                risk,
                ambiguity,
                ..
            } => {
                expect_below("policy index", h.policies, *policy)?;
                expect_len("policy actions", h.horizon, actions.len())?;
                expect_len("risk terms", h.horizon, risk.len())?;
                expect_len("ambiguity terms", h.horizon, ambiguity.len())?;
                for &a in actions {
                    expect_below("action index", h.actions.len(), a)?;
                }
                Ok(())
            }
            EventBody::PolicyPosterior {
                probs,
                marginals,
                action,
                best_policy,
                ..
            } => {
                expect_len("policy posterior", h.policies, probs.len())?;
                expect_len("action marginals", h.actions.len(), marginals.len())?;
                expect_below("action index", h.actions.len(), *action)?;
                expect_below("policy index", h.policies, *best_policy)
            }
            EventBody::Action { action } => expect_below("action index", h.actions.len(), *action),
            EventBody::ProcessTruth { state, .. } => {
                expect_below("process state", self.header.process_states.len(), *state)
            }
        }
    }

    pub fn steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self.events.iter().map(|e| e.step).collect();
        steps.dedup();
        steps
    }

    pub fn events_at(&self, step: usize) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.step == step)
    }
}

/// Serializes a trace as pretty-printed JSON. Floats use shortest
/// round-trip representations, so [`import_trace`] restores them exactly.
pub fn export_trace(trace: &AuditTrace) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(trace).expect("trace values are always serializable");
    bytes.push(b'\n');
    bytes
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, chunk) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += chunk.len();
    }
    bytes.len()
}

pub(crate) fn json_error(bytes: &[u8], e: serde_json::Error) -> Error {
    Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        reason: e.to_string(),
    }
}

/// Parses and re-validates a trace. Sequence numbers must be strictly
/// increasing and every payload must match the header's dimensions.
pub fn import_trace(bytes: &[u8]) -> Result<AuditTrace> {
    let trace: AuditTrace = serde_json::from_slice(bytes).map_err(|e| json_error(bytes, e))?;
    if trace.header.format != TRACE_FORMAT {
        return Err(Error::Parse {
            offset: 0,
            reason: format!("unsupported trace format '{}'", trace.header.format),
        });
    }
    let mut last: Option<&TraceEvent> = None;
    for event in &trace.events {
        trace.check_event(event.step, event.level, &event.body)?;
        if let Some(prev) = last {
            if event.sequence_no <= prev.sequence_no {
                return Err(Error::Sequence(format!(
                    "sequence_no {} follows {}",
                    event.sequence_no, prev.sequence_no
                )));
            }
            if event.step < prev.step {
                return Err(Error::Sequence(format!(
                    "step {} follows step {}",
                    event.step, prev.step
                )));
            }
        }
        last = Some(event);
    }
    Ok(trace)
}
