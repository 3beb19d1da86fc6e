//! Single-level perception: posterior state estimation, variational free
//! energy and one-step state prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{
    floored_ln, kl_divergence, softmax, Categorical, LikelihoodMatrix, TransitionModel,
};

/// A distribution over outcomes. One-hot for sensed data, soft when it is a
/// posterior ascended from the level below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation {
    pub dist: Categorical,
}

impl Observation {
    pub fn new(dist: Categorical) -> Self {
        Self { dist }
    }

    pub fn one_hot(n_outcomes: usize, outcome: usize) -> Result<Self> {
        Ok(Self::new(Categorical::one_hot(n_outcomes, outcome)?))
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

/// Beliefs about latent states at a given step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub dist: Categorical,
    pub timestamp: usize,
}

impl Belief {
    pub fn new(dist: Categorical, timestamp: usize) -> Self {
        Self { dist, timestamp }
    }

    pub fn probs(&self) -> &[f64] {
        self.dist.probs()
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

fn check_dims(a_eff: &LikelihoodMatrix, states: usize, obs: &Observation) -> Result<()> {
    if a_eff.n_cols() != states {
        return Err(Error::dim("likelihood states", a_eff.n_cols(), states));
    }
    if a_eff.n_rows() != obs.len() {
        return Err(Error::dim(
            "observation outcomes",
            a_eff.n_rows(),
            obs.len(),
        ));
    }
    Ok(())
}

/// Expected log-likelihood of each state under a (possibly soft) observation:
/// `sum_o obs(o) ln A[o, s]`.
pub fn log_likelihood(a_eff: &LikelihoodMatrix, obs: &Observation) -> Vec<f64> {
    let o = obs.dist.probs();
    (0..a_eff.n_cols())
        .map(|s| {
            a_eff
                .column(s)
                .probs()
                .iter()
                .zip(o)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&p, &w)| w * floored_ln(p))
                .sum()
        })
        .collect()
}

/// Closed-form posterior: `softmax(ln prior + ln A^T obs)`.
///
/// `a_eff` must already carry whatever precision applies at this level.
/// The returned belief keeps the prior's timestamp.
pub fn infer_states(a_eff: &LikelihoodMatrix, prior: &Belief, obs: &Observation) -> Result<Belief> {
    check_dims(a_eff, prior.len(), obs)?;
    let ll = log_likelihood(a_eff, obs);
    let logits: Vec<f64> = prior
        .probs()
        .iter()
        .zip(&ll)
        .map(|(&p, l)| floored_ln(p) + l)
        .collect();
    Ok(Belief::new(softmax(&logits)?, prior.timestamp))
}

/// `F = KL(q || prior) - E_q[ln A^T obs]`, in nats.
pub fn variational_free_energy(
    q: &Belief,
    prior: &Belief,
    a_eff: &LikelihoodMatrix,
    obs: &Observation,
) -> Result<f64> {
    if q.len() != prior.len() {
        return Err(Error::dim("belief states", prior.len(), q.len()));
    }
    check_dims(a_eff, prior.len(), obs)?;
    let complexity = kl_divergence(&q.dist, &prior.dist)?;
    let accuracy: f64 = q
        .probs()
        .iter()
        .zip(log_likelihood(a_eff, obs))
        .map(|(&qs, l)| qs * l)
        .sum();
    Ok(complexity - accuracy)
}

/// `B[action] belief`, one step later.
pub fn predict_states(b: &TransitionModel, belief: &Belief, action: usize) -> Result<Belief> {
    let m = b.action(action)?;
    Ok(Belief::new(
        m.push_forward(&belief.dist)?,
        belief.timestamp + 1,
    ))
}
