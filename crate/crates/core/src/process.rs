//! Ground-truth environment simulator.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`). Each categorical draw takes
//! one `f64` uniform on `[0, 1)` and walks the cumulative distribution, so a
//! seed yields the same trajectory on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hierarchy::GenerativeModel;
use crate::inference::Observation;
use crate::prob::{Categorical, StochasticMatrix, TransitionModel};
use crate::spec::{PhaseSpec, ProcessSpec};

/// A scripted stretch of steps with its own dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub label: String,
    pub length: usize,
    /// Overrides the process's base transitions while the phase is active.
    pub transitions: Option<TransitionModel>,
}

#[derive(Debug, Clone)]
pub struct GenerativeProcess {
    name: String,
    state_labels: Vec<String>,
    outcome_labels: Vec<String>,
    initial: Categorical,
    emission: StochasticMatrix,
    transitions: TransitionModel,
    phases: Vec<Phase>,
    state: usize,
    step: usize,
    rng: ChaCha8Rng,
}

/// Draws an index from `dist` using one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, dist: &Categorical) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_supported = 0;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_supported = i;
        if u < cumulative {
            return i;
        }
    }
    last_supported
}

impl GenerativeProcess {
    pub fn new(
        name: impl Into<String>,
        state_labels: Vec<String>,
        outcome_labels: Vec<String>,
        initial: Categorical,
        emission: StochasticMatrix,
        transitions: TransitionModel,
        phases: Vec<Phase>,
    ) -> Result<Self> {
        let states = emission.n_cols();
        if initial.len() != states {
            return Err(Error::dim("initial states", states, initial.len()));
        }
        if transitions.n_states() != states {
            return Err(Error::dim(
                "transition states",
                states,
                transitions.n_states(),
            ));
        }
        if state_labels.len() != states {
            return Err(Error::dim("state labels", states, state_labels.len()));
        }
        if outcome_labels.len() != emission.n_rows() {
            return Err(Error::dim(
                "outcome labels",
                emission.n_rows(),
                outcome_labels.len(),
            ));
        }
        for phase in &phases {
            if phase.length == 0 {
                return Err(Error::InvalidModel(format!(
                    "phase '{}' has zero length",
                    phase.label
                )));
            }
            if let Some(t) = &phase.transitions {
                if t.n_states() != states {
                    return Err(Error::dim("phase transition states", states, t.n_states()));
                }
                if t.n_actions() != transitions.n_actions() {
                    return Err(Error::dim(
                        "phase actions",
                        transitions.n_actions(),
                        t.n_actions(),
                    ));
                }
            }
        }
        let mut process = Self {
            name: name.into(),
            state_labels,
            outcome_labels,
            initial,
            emission,
            transitions,
            phases,
            state: 0,
            step: 1,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        process.reset(0);
        Ok(process)
    }

    /// A process whose dynamics are exactly the model's own `A`, `B` and `D`.
    pub fn mirror(model: &GenerativeModel) -> Result<Self> {
        Self::new(
            model.name(),
            model.labels().states.clone(),
            model.labels().outcomes.clone(),
            model.initial_prior().clone(),
            model.likelihood().clone(),
            model.transitions().clone(),
            Vec::new(),
        )
    }

    /// Reseeds and draws a fresh initial state. The current step becomes 1.
    pub fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.step = 1;
        self.state = sample_categorical(&mut self.rng, &self.initial);
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_states(&self) -> usize {
        self.emission.n_cols()
    }
    pub fn n_outcomes(&self) -> usize {
        self.emission.n_rows()
    }
    pub fn n_actions(&self) -> usize {
        self.transitions.n_actions()
    }
    pub fn true_state(&self) -> usize {
        self.state
    }
    pub fn current_step(&self) -> usize {
        self.step
    }
    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    fn phase_at(&self, step: usize) -> Option<&Phase> {
        let cycle: usize = self.phases.iter().map(|p| p.length).sum();
        if cycle == 0 {
            return None;
        }
        let mut pos = (step - 1) % cycle;
        for phase in &self.phases {
            if pos < phase.length {
                return Some(phase);
            }
            pos -= phase.length;
        }
        None
    }

    /// Label of the phase active at the current step.
    pub fn phase_label(&self) -> Option<&str> {
        self.phase_at(self.step).map(|p| p.label.as_str())
    }

    /// Samples a one-hot observation from the current state's emission column.
    pub fn emit(&mut self) -> Observation {
        let outcome = sample_categorical(&mut self.rng, self.emission.column(self.state));
        Observation::one_hot(self.n_outcomes(), outcome).expect("sampled outcome is in range")
    }

    /// Moves to the next step, sampling the next state from the action's
    /// transition column (using the next step's phase dynamics).
    pub fn advance(&mut self, action: usize) -> Result<()> {
        let next_step = self.step + 1;
        let transitions = self
            .phase_at(next_step)
            .and_then(|p| p.transitions.as_ref())
            .unwrap_or(&self.transitions);
        let column = transitions.action(action)?.column(self.state).clone();
        self.state = sample_categorical(&mut self.rng, &column);
        self.step = next_step;
        Ok(())
    }

    /// Advances under `action`, then emits from the new state.
    pub fn simulate_process(&mut self, action: usize) -> Result<Observation> {
        self.advance(action)?;
        Ok(self.emit())
    }

    pub fn to_spec(&self) -> ProcessSpec {
        let matrices = |t: &TransitionModel| {
            t.per_action()
                .iter()
                .map(StochasticMatrix::to_rows)
                .collect()
        };
        ProcessSpec {
            name: self.name.clone(),
            states: self.state_labels.clone(),
            outcomes: self.outcome_labels.clone(),
            initial: self.initial.probs().to_vec(),
            emission: self.emission.to_rows(),
            transitions: matrices(&self.transitions),
            phases: self
                .phases
                .iter()
                .map(|p| PhaseSpec {
                    label: p.label.clone(),
                    length: p.length,
                    transitions: p.transitions.as_ref().map(matrices),
                })
                .collect(),
        }
    }
}
