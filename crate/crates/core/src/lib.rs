//! Auditable hierarchical active inference.
//!
//! Agents are stacks of discrete generative models. Level 1 perceives and
//! acts; each level above treats the posterior of the level below as data
//! and, through an attentional precision map, sets how sharply the level
//! below weighs its evidence. Every belief update, precision value and
//! policy evaluation is written to an [`audit::AuditTrace`] that can be
//! exported, replayed and rendered as a plain-text self-report.
//!
//! Module map:
//!
//! - [`prob`]: categorical distributions, stochastic matrices, entropy, KL,
//!   precision weighting
//! - [`inference`]: posterior state estimation, free energy, prediction
//! - [`planning`]: expected free energy, policy posterior, action choice
//! - [`hierarchy`]: level coupling, the agent step and episode loop
//! - [`audit`]: traces, explanations, reports, replay
//! - [`spec`] and [`process`]: JSON model/process files and the simulator

pub mod audit;
pub mod demos;
pub mod error;
pub mod hierarchy;
pub mod inference;
pub mod planning;
pub mod prob;
pub mod process;
pub mod spec;

pub use error::{Error, Location, Result};
pub use hierarchy::{
    ascend, descend, run_episode, CovertActionRecord, GenerativeModel, HierarchicalAgent, Labels,
    ModelParts, PrecisionMap, StepOutcome,
};
pub use inference::{infer_states, predict_states, variational_free_energy, Belief, Observation};
pub use planning::{
    enumerate_policies, expected_free_energy, expected_observations, plan, policy_posterior,
    select_action, ActionChoice, Policy, PolicyEvaluation,
};
pub use prob::{
    entropy, kl_divergence, normalize, precision_weight, softmax, Categorical, LikelihoodMatrix,
    Precision, PreferenceVector, StochasticMatrix, TransitionModel,
};
pub use process::GenerativeProcess;
pub use spec::{parse_model_spec, parse_process_spec, ModelSpec, ProcessSpec};
