//! Bundled demo scenarios.
//!
//! - `tmaze`: a single-level T-maze. The agent starts at the center and can
//!   visit a cue or commit to one of two absorbing arms, one of which is
//!   rewarded.
//! - `attention`: two levels. Level 1 tracks a randomly flipping world state
//!   together with a quiet/noisy context; level 2 infers whether attention is
//!   focused or lapsed from level 1's posteriors and sets level 1's
//!   likelihood precision (2.0 when focused, 0.25 when lapsed). The process
//!   scripts alternating focused and lapsed phases of five steps.

use crate::error::Result;
use crate::spec::{parse_model_spec, parse_process_spec, ModelSpec, ProcessSpec};

pub const TMAZE_AGENT: &str = include_str!("../demos/tmaze.agent.json");
pub const ATTENTION_AGENT: &str = include_str!("../demos/attention.agent.json");
pub const ATTENTION_PROCESS: &str = include_str!("../demos/attention.process.json");

/// Episode length used for the attention scenario.
pub const ATTENTION_STEPS: usize = 20;

pub fn tmaze_agent() -> Result<ModelSpec> {
    parse_model_spec(TMAZE_AGENT)
}

pub fn attention_agent() -> Result<ModelSpec> {
    parse_model_spec(ATTENTION_AGENT)
}

pub fn attention_process() -> Result<ProcessSpec> {
    parse_process_spec(ATTENTION_PROCESS)
}
