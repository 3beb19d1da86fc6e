//! Levels coupled into one introspective agent.
//!
//! Each level is a discrete generative model. Posteriors at level `n` are
//! handed to level `n + 1` as (soft) data, and the attentional posterior at
//! level `n + 1` sets the likelihood precision used at level `n`. Only level 1
//! plans and acts overtly; higher levels act covertly, through precision.

use serde::{Deserialize, Serialize};

use crate::audit::trace::{AuditTrace, EventBody, EventRecord, TraceHeader};
use crate::error::{Error, Result};
use crate::inference::{
    infer_states, predict_states, variational_free_energy, Belief, Observation,
};
use crate::planning::{enumerate_policies, plan, ActionChoice, Policy};
use crate::prob::{
    entropy, precision_weight, Categorical, LikelihoodMatrix, Precision, PreferenceVector,
    TransitionModel,
};
use crate::process::GenerativeProcess;

/// Default maximum number of levels.
pub const DEFAULT_MAX_LEVELS: usize = 3;

/// Human-readable names for a level's states, outcomes and actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub states: Vec<String>,
    pub outcomes: Vec<String>,
    pub actions: Vec<String>,
}

impl Labels {
    /// `s0, s1, ...`, `o0, ...`, `a0, ...`.
    pub fn numbered(states: usize, outcomes: usize, actions: usize) -> Self {
        let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect();
        Self {
            states: names("s", states),
            outcomes: names("o", outcomes),
            actions: names("a", actions),
        }
    }
}

/// Everything needed to build a [`GenerativeModel`].
#[derive(Debug, Clone)]
pub struct ModelParts {
    pub name: String,
    pub labels: Labels,
    pub a: LikelihoodMatrix,
    pub b: TransitionModel,
    pub c: PreferenceVector,
    pub d: Categorical,
    /// Policy prior; uniform over the enumerated policies when `None`.
    pub e: Option<Categorical>,
    pub gamma_g: Precision,
    pub horizon: usize,
    pub horizon_cap: usize,
}

/// One level's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    name: String,
    labels: Labels,
    a: LikelihoodMatrix,
    b: TransitionModel,
    c: PreferenceVector,
    d: Categorical,
    e: Categorical,
    gamma_g: Precision,
    horizon: usize,
    policies: Vec<Policy>,
}

impl GenerativeModel {
    pub fn new(parts: ModelParts) -> Result<Self> {
        let ModelParts {
            name,
            labels,
            a,
            b,
            c,
            d,
            e,
            gamma_g,
            horizon,
            horizon_cap,
        } = parts;
        let states = a.n_cols();
        let outcomes = a.n_rows();
        if b.n_states() != states {
            return Err(Error::dim("B states", states, b.n_states()));
        }
        if d.len() != states {
            return Err(Error::dim("D states", states, d.len()));
        }
        if c.len() != outcomes {
            return Err(Error::dim("C outcomes", outcomes, c.len()));
        }
        if labels.states.len() != states {
            return Err(Error::dim("state labels", states, labels.states.len()));
        }
        if labels.outcomes.len() != outcomes {
            return Err(Error::dim(
                "outcome labels",
                outcomes,
                labels.outcomes.len(),
            ));
        }
        if labels.actions.len() != b.n_actions() {
            return Err(Error::dim(
                "action labels",
                b.n_actions(),
                labels.actions.len(),
            ));
        }
        if horizon == 0 || horizon > horizon_cap {
            return Err(Error::InvalidModel(format!(
                "horizon {horizon} outside 1..={horizon_cap}"
            )));
        }
        let policies = enumerate_policies(b.n_actions(), horizon);
        let e = match e {
            Some(e) => e,
            None => Categorical::uniform(policies.len())?,
        };
        if e.len() != policies.len() {
            return Err(Error::dim("E policies", policies.len(), e.len()));
        }
        Ok(Self {
            name,
            labels,
            a,
            b,
            c,
            d,
            e,
            gamma_g,
            horizon,
            policies,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn labels(&self) -> &Labels {
        &self.labels
    }
    pub fn likelihood(&self) -> &LikelihoodMatrix {
        &self.a
    }
    pub fn transitions(&self) -> &TransitionModel {
        &self.b
    }
    pub fn preferences(&self) -> &PreferenceVector {
        &self.c
    }
    pub fn initial_prior(&self) -> &Categorical {
        &self.d
    }
    pub fn policy_prior(&self) -> &Categorical {
        &self.e
    }
    pub fn gamma_g(&self) -> Precision {
        self.gamma_g
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }
    pub fn n_states(&self) -> usize {
        self.a.n_cols()
    }
    pub fn n_outcomes(&self) -> usize {
        self.a.n_rows()
    }
    pub fn n_actions(&self) -> usize {
        self.b.n_actions()
    }
}

/// Likelihood precision applied to the level below, one value per state of
/// the level above.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMap {
    values: Vec<Precision>,
}

impl PrecisionMap {
    pub fn new(values: Vec<Precision>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { values })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&g| Precision::new(g))
                .collect::<Result<_>>()?,
        )
    }

    pub fn values(&self) -> &[Precision] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .map(|p| p.value())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .map(|p| p.value())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|p| p.value()).collect()
    }
}

/// A covert (attentional) action: the precision a level imposed on the level
/// below at a given step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertActionRecord {
    /// Level receiving the precision (1-based).
    pub level: usize,
    pub attentional_posterior: Categorical,
    pub effective_gamma: Precision,
    pub step: usize,
}

/// Posterior at one level becomes a soft observation for the level above.
pub fn ascend(posterior: &Belief) -> Observation {
    Observation::new(posterior.dist.clone())
}

/// Expected precision under the attentional posterior.
pub fn descend(att_posterior: &Belief, map: &PrecisionMap) -> Result<Precision> {
    if att_posterior.len() != map.len() {
        return Err(Error::dim("precision map", map.len(), att_posterior.len()));
    }
    let gamma: f64 = att_posterior
        .probs()
        .iter()
        .zip(map.values())
        .map(|(p, g)| p * g.value())
        .sum();
    // Round-off can nudge the convex combination just outside its hull.
    Precision::new(gamma.clamp(map.min(), map.max()))
}

#[derive(Debug, Clone)]
struct LevelState {
    /// Latest posterior (the initial prior before the first tick).
    posterior: Belief,
    /// Action to roll `posterior` forward with at the next tick.
    pending_action: Option<usize>,
}

/// Result of one agent step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub step: usize,
    pub action: usize,
    pub choice: ActionChoice,
    /// Level-1 posterior at this step.
    pub posterior: Belief,
    pub covert: Vec<CovertActionRecord>,
    pub events: Vec<EventRecord>,
}

/// Ordered levels (index 0 is level 1) with their couplings.
#[derive(Debug, Clone)]
pub struct HierarchicalAgent {
    name: String,
    levels: Vec<GenerativeModel>,
    couplings: Vec<PrecisionMap>,
    tick_ratio: usize,
    top_gamma: Precision,
    state: Option<Vec<LevelState>>,
    step: usize,
}

impl HierarchicalAgent {
    /// Validates the level chain. The agent starts uninitialized; call
    /// [`HierarchicalAgent::initialize`] before stepping.
    pub fn new(
        name: impl Into<String>,
        levels: Vec<GenerativeModel>,
        couplings: Vec<PrecisionMap>,
        tick_ratio: usize,
        top_gamma: Precision,
    ) -> Result<Self> {
        Self::with_max_levels(
            name,
            levels,
            couplings,
            tick_ratio,
            top_gamma,
            DEFAULT_MAX_LEVELS,
        )
    }

    pub fn with_max_levels(
        name: impl Into<String>,
        levels: Vec<GenerativeModel>,
        couplings: Vec<PrecisionMap>,
        tick_ratio: usize,
        top_gamma: Precision,
        max_levels: usize,
    ) -> Result<Self> {
        if levels.is_empty() || levels.len() > max_levels {
            return Err(Error::InvalidModel(format!(
                "{} levels, expected 1..={max_levels}",
                levels.len()
            )));
        }
        if tick_ratio == 0 {
            return Err(Error::InvalidModel("tick ratio must be at least 1".into()));
        }
        if couplings.len() != levels.len() - 1 {
            return Err(Error::dim("couplings", levels.len() - 1, couplings.len()));
        }
        for (n, pair) in levels.windows(2).enumerate() {
            if pair[0].n_states() != pair[1].n_outcomes() {
                return Err(Error::dim(
                    "level outcomes vs states of level below",
                    pair[0].n_states(),
                    pair[1].n_outcomes(),
                ));
            }
            if couplings[n].len() != pair[1].n_states() {
                return Err(Error::dim(
                    "precision map",
                    pair[1].n_states(),
                    couplings[n].len(),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            levels,
            couplings,
            tick_ratio,
            top_gamma,
            state: None,
            step: 0,
        })
    }

    /// Resets every level's belief to its initial prior `D` and the step
    /// counter to zero.
    pub fn initialize(&mut self) {
        self.state = Some(
            self.levels
                .iter()
                .map(|m| LevelState {
                    posterior: Belief::new(m.initial_prior().clone(), 0),
                    pending_action: None,
                })
                .collect(),
        );
        self.step = 0;
    }

    pub fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn levels(&self) -> &[GenerativeModel] {
        &self.levels
    }
    pub fn couplings(&self) -> &[PrecisionMap] {
        &self.couplings
    }
    pub fn tick_ratio(&self) -> usize {
        self.tick_ratio
    }
    pub fn top_gamma(&self) -> Precision {
        self.top_gamma
    }
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Latest belief per level, if initialized.
    pub fn beliefs(&self) -> Option<Vec<&Belief>> {
        self.state
            .as_ref()
            .map(|s| s.iter().map(|l| &l.posterior).collect())
    }

    /// Whether level `level` (1-based) updates at step `step` (1-based).
    pub fn is_due(&self, level: usize, step: usize) -> bool {
        let period = self.tick_ratio.pow(level as u32 - 1);
        step.is_multiple_of(period)
    }

    /// One perception-action cycle.
    ///
    /// Top-down: each level's likelihood precision is the expected precision
    /// under the latest belief of the level above (the top level uses its
    /// native precision). Bottom-up: level 1 infers from `obs`, and each due
    /// level above infers from the ascended posterior of the one below.
    /// Level 1 then plans and picks the overt action.
    pub fn step_agent(&mut self, obs: &Observation) -> Result<StepOutcome> {
        let n_levels = self.levels.len();
        let state = self.state.as_mut().ok_or(Error::UninitializedAgent)?;
        if obs.len() != self.levels[0].n_outcomes() {
            return Err(Error::dim(
                "observation outcomes",
                self.levels[0].n_outcomes(),
                obs.len(),
            ));
        }
        self.step += 1;
        let t = self.step;
        let due: Vec<bool> = (0..n_levels)
            .map(|n| t.is_multiple_of(self.tick_ratio.pow(n as u32)))
            .collect();
        let mut events = Vec::new();

        let mut gammas = vec![self.top_gamma; n_levels];
        for n in (0..n_levels - 1).rev() {
            gammas[n] = descend(&state[n + 1].posterior, &self.couplings[n])?;
        }
        let mut covert = Vec::new();
        for n in (0..n_levels).rev().filter(|&n| due[n]) {
            let body = if n + 1 < n_levels {
                let attention = state[n + 1].posterior.dist.clone();
                covert.push(CovertActionRecord {
                    level: n + 1,
                    attentional_posterior: attention.clone(),
                    effective_gamma: gammas[n],
                    step: t,
                });
                EventBody::PrecisionDescend {
                    attention: Some(attention.into_vec()),
                    map: Some(self.couplings[n].as_f64()),
                    gamma: gammas[n].value(),
                }
            } else {
                EventBody::PrecisionDescend {
                    attention: None,
                    map: None,
                    gamma: gammas[n].value(),
                }
            };
            events.push(EventRecord::new(t, n + 1, body));
        }

        let mut data = obs.clone();
        let mut a_eff_first = None;
        for n in 0..n_levels {
            if !due[n] {
                break;
            }
            let model = &self.levels[n];
            let level_state = &mut state[n];
            let mut prior = match level_state.pending_action {
                None => level_state.posterior.clone(),
                Some(a) => predict_states(model.transitions(), &level_state.posterior, a)?,
            };
            prior.timestamp = t;
            let data_event = if n == 0 {
                EventBody::Observation {
                    dist: data.dist.probs().to_vec(),
                }
            } else {
                EventBody::Ascend {
                    dist: data.dist.probs().to_vec(),
                }
            };
            events.push(EventRecord::new(t, n + 1, data_event));
            events.push(EventRecord::new(
                t,
                n + 1,
                EventBody::Prior {
                    dist: prior.probs().to_vec(),
                },
            ));
            let a_eff = precision_weight(model.likelihood(), gammas[n])?;
            let posterior = infer_states(&a_eff, &prior, &data)?;
            let f = variational_free_energy(&posterior, &prior, &a_eff, &data)?;
            events.push(EventRecord::new(
                t,
                n + 1,
                EventBody::Posterior {
                    dist: posterior.probs().to_vec(),
                },
            ));
            events.push(EventRecord::new(t, n + 1, EventBody::Vfe { value: f }));
            data = ascend(&posterior);
            level_state.posterior = posterior;
            if n > 0 {
                level_state.pending_action = Some(0);
            }
            if n == 0 {
                a_eff_first = Some(a_eff);
            }
        }

        let a_eff = a_eff_first.expect("level 1 ticks every step");
        let model = &self.levels[0];
        let posterior = state[0].posterior.clone();
        let outcome = plan(
            &a_eff,
            model.transitions(),
            model.preferences(),
            model.policy_prior(),
            model.gamma_g(),
            model.policies(),
            &posterior,
        )?;
        for (i, e) in outcome.evaluations.iter().enumerate() {
            events.push(EventRecord::new(
                t,
                1,
                EventBody::PolicyEval {
                    policy: i,
                    actions: e.policy.actions().to_vec(),
                    g: e.g,
                    risk: e.risk_per_step.clone(),
                    ambiguity: e.ambiguity_per_step.clone(),
                    f: e.f,
                    posterior: e.posterior_prob,
                },
            ));
        }
        let choice = outcome.choice;
        events.push(EventRecord::new(
            t,
            1,
            EventBody::PolicyPosterior {
                probs: outcome.posterior.probs().to_vec(),
                marginals: choice.marginals.clone(),
                action: choice.action,
                best_policy: choice.best_policy,
                confidence: choice.confidence,
                entropy: entropy(&outcome.posterior),
            },
        ));
        events.push(EventRecord::new(
            t,
            1,
            EventBody::Action {
                action: choice.action,
            },
        ));
        state[0].pending_action = Some(choice.action);

        Ok(StepOutcome {
            step: t,
            action: choice.action,
            choice,
            posterior,
            covert,
            events,
        })
    }
}

/// Runs `steps` perception-action cycles against `process`, recording every
/// event. The same inputs always give the same trace.
pub fn run_episode(
    agent: &mut HierarchicalAgent,
    process: &mut GenerativeProcess,
    steps: usize,
    seed: u64,
) -> Result<AuditTrace> {
    if steps == 0 {
        return Err(Error::InvalidModel(
            "episode needs at least one step".into(),
        ));
    }
    let n_outcomes = agent.levels()[0].n_outcomes();
    if process.n_outcomes() != n_outcomes {
        return Err(Error::dim(
            "process outcomes",
            n_outcomes,
            process.n_outcomes(),
        ));
    }
    if process.n_actions() != agent.levels()[0].n_actions() {
        return Err(Error::dim(
            "process actions",
            agent.levels()[0].n_actions(),
            process.n_actions(),
        ));
    }
    agent.initialize();
    process.reset(seed);
    let header = TraceHeader::new(&agent.to_spec(), &process.to_spec(), seed, steps)?;
    let mut trace = AuditTrace::new(header);
    for t in 1..=steps {
        let obs = process.emit();
        trace.record(EventRecord::new(
            t,
            1,
            EventBody::ProcessTruth {
                state: process.true_state(),
                phase: process.phase_label().map(str::to_owned),
            },
        ))?;
        let outcome = agent.step_agent(&obs).map_err(|e| Error::Step {
            step: t,
            source: Box::new(e),
        })?;
        for event in outcome.events {
            trace.record(event)?;
        }
        if t < steps {
            process.advance(outcome.action).map_err(|e| Error::Step {
                step: t,
                source: Box::new(e),
            })?;
        }
    }
    Ok(trace)
}
