//! Policy evaluation and action selection.
//!
//! A policy is scored by its expected free energy `G`, the sum over the
//! planning horizon of *risk* (divergence of predicted outcomes from the
//! preferred outcomes) and *ambiguity* (expected entropy of the likelihood
//! under predicted states). The policy posterior combines `G` with the policy
//! prior `E` and any retrospective free energy `F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{predict_states, Belief};
use crate::prob::{
    entropy, floored_ln, kl_divergence, softmax, Categorical, LikelihoodMatrix, Precision,
    PreferenceVector, TransitionModel,
};

/// Default cap on the planning horizon.
pub const DEFAULT_HORIZON_CAP: usize = 4;

/// A fixed-length sequence of actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>, n_actions: usize, horizon_cap: usize) -> Result<Self> {
        if actions.is_empty() || actions.len() > horizon_cap {
            return Err(Error::InvalidModel(format!(
                "policy length {} outside 1..={horizon_cap}",
                actions.len()
            )));
        }
        if let Some(&action) = actions.iter().find(|&&a| a >= n_actions) {
            return Err(Error::UnknownAction { action, n_actions });
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn first_action(&self) -> usize {
        self.actions[0]
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// Every action sequence of length `horizon`, in lexicographic order (the
/// first action varies slowest).
pub fn enumerate_policies(n_actions: usize, horizon: usize) -> Vec<Policy> {
    if n_actions == 0 || horizon == 0 {
        return Vec::new();
    }
    let count = n_actions.pow(horizon as u32);
    (0..count)
        .map(|mut index| {
            let mut actions = vec![0; horizon];
            for slot in actions.iter_mut().rev() {
                *slot = index % n_actions;
                index /= n_actions;
            }
            Policy { actions }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub policy: Policy,
    pub g: f64,
    pub risk_per_step: Vec<f64>,
    pub ambiguity_per_step: Vec<f64>,
    pub f: f64,
    pub posterior_prob: f64,
}

impl PolicyEvaluation {
    pub fn risk(&self) -> f64 {
        self.risk_per_step.iter().sum()
    }

    pub fn ambiguity(&self) -> f64 {
        self.ambiguity_per_step.iter().sum()
    }
}

/// Predicted outcome distribution `A s`.
pub fn expected_observations(a_eff: &LikelihoodMatrix, s_pred: &Belief) -> Result<Categorical> {
    a_eff.push_forward(&s_pred.dist)
}

/// Rolls `belief` forward through the policy's actions and accumulates
/// per-step risk and ambiguity. `f` and `posterior_prob` are left at zero.
pub fn expected_free_energy(
    a_eff: &LikelihoodMatrix,
    transitions: &TransitionModel,
    preferences: &PreferenceVector,
    belief: &Belief,
    policy: &Policy,
) -> Result<PolicyEvaluation> {
    if a_eff.n_cols() != belief.len() {
        return Err(Error::dim("belief states", a_eff.n_cols(), belief.len()));
    }
    if a_eff.n_rows() != preferences.len() {
        return Err(Error::dim(
            "preference outcomes",
            a_eff.n_rows(),
            preferences.len(),
        ));
    }
    let column_entropy: Vec<f64> = a_eff.columns().iter().map(entropy).collect();

    let mut risk_per_step = Vec::with_capacity(policy.horizon());
    let mut ambiguity_per_step = Vec::with_capacity(policy.horizon());
    let mut state = belief.clone();
    for &action in policy.actions() {
        state = predict_states(transitions, &state, action)?;
        let outcomes = expected_observations(a_eff, &state)?;
        risk_per_step.push(kl_divergence(&outcomes, preferences.dist())?);
        ambiguity_per_step.push(
            state
                .probs()
                .iter()
                .zip(&column_entropy)
                .map(|(s, h)| s * h)
                .sum(),
        );
    }
    let g = risk_per_step.iter().sum::<f64>() + ambiguity_per_step.iter().sum::<f64>();
    Ok(PolicyEvaluation {
        policy: policy.clone(),
        g,
        risk_per_step,
        ambiguity_per_step,
        f: 0.0,
        posterior_prob: 0.0,
    })
}

/// `softmax(ln E - F - gamma_G * G)`.
pub fn policy_posterior(
    prior: &Categorical,
    free_energy: &[f64],
    expected_free_energy: &[f64],
    gamma_g: Precision,
) -> Result<Categorical> {
    let n = prior.len();
    if free_energy.len() != n {
        return Err(Error::dim("F per policy", n, free_energy.len()));
    }
    if expected_free_energy.len() != n {
        return Err(Error::dim("G per policy", n, expected_free_energy.len()));
    }
    let logits: Vec<f64> = prior
        .probs()
        .iter()
        .zip(free_energy)
        .zip(expected_free_energy)
        .map(|((&e, &f), &g)| floored_ln(e) - f - gamma_g.value() * g)
        .collect();
    softmax(&logits)
}

/// The overt action picked from a policy posterior, with its rationale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionChoice {
    pub action: usize,
    /// Posterior mass of policies starting with each action.
    pub marginals: Vec<f64>,
    /// Most probable policy among those starting with `action`.
    pub best_policy: usize,
    /// Posterior probability of `best_policy`.
    pub confidence: f64,
}

/// Marginalizes the policy posterior over first actions and takes the
/// argmax, breaking ties toward the lowest action index.
pub fn select_action(posterior: &Categorical, policies: &[Policy]) -> Result<ActionChoice> {
    if policies.is_empty() {
        return Err(Error::EmptyPolicySet);
    }
    if posterior.len() != policies.len() {
        return Err(Error::dim(
            "policy posterior",
            policies.len(),
            posterior.len(),
        ));
    }
    let n_actions = policies.iter().map(Policy::first_action).max().unwrap_or(0) + 1;
    let mut marginals = vec![0.0; n_actions];
    for (p, policy) in posterior.probs().iter().zip(policies) {
        marginals[policy.first_action()] += p;
    }
    let mut action = 0;
    for (a, &m) in marginals.iter().enumerate() {
        if m > marginals[action] {
            action = a;
        }
    }
    let mut best_policy = None;
    for (i, policy) in policies.iter().enumerate() {
        if policy.first_action() != action {
            continue;
        }
        match best_policy {
            Some(b) if posterior.probs()[i] <= posterior.probs()[b] => {}
            _ => best_policy = Some(i),
        }
    }
    // `action` has the largest marginal, so some policy starts with it.
    let best_policy = best_policy.ok_or(Error::EmptyPolicySet)?;
    Ok(ActionChoice {
        action,
        marginals,
        best_policy,
        confidence: posterior.probs()[best_policy],
    })
}

/// Full planning pass at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub evaluations: Vec<PolicyEvaluation>,
    pub posterior: Categorical,
    pub choice: ActionChoice,
}

/// Evaluates every policy, forms the posterior (with `F = 0` for all
/// policies) and selects an action.
pub fn plan(
    a_eff: &LikelihoodMatrix,
    transitions: &TransitionModel,
    preferences: &PreferenceVector,
    policy_prior: &Categorical,
    gamma_g: Precision,
    policies: &[Policy],
    belief: &Belief,
) -> Result<PlanOutcome> {
    let mut evaluations = policies
        .iter()
        .map(|p| expected_free_energy(a_eff, transitions, preferences, belief, p))
        .collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> = evaluations.iter().map(|e| e.f).collect();
    let g: Vec<f64> = evaluations.iter().map(|e| e.g).collect();
    let posterior = policy_posterior(policy_prior, &f, &g, gamma_g)?;
    for (e, &p) in evaluations.iter_mut().zip(posterior.probs()) {
        e.posterior_prob = p;
    }
    let choice = select_action(&posterior, policies)?;
    Ok(PlanOutcome {
        evaluations,
        posterior,
        choice,
    })
}
