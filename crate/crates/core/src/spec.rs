//! JSON model and process specs.
//!
//! A model spec names every matrix and vector of every level, plus the
//! labels used in reports. Matrices are written row-major with rows indexing
//! outcomes (for `A`) or next states (for `B`), so each column must sum to 1.
//!
//! Validation errors carry a [`Location`] (level, field, index), e.g.
//! `level 1, A, column 2 (state 'right'): sums to 0.98`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::audit::trace::json_error;
use crate::error::{Error, Location, Result};
use crate::hierarchy::{
    GenerativeModel, HierarchicalAgent, Labels, ModelParts, PrecisionMap, DEFAULT_MAX_LEVELS,
};
use crate::planning::DEFAULT_HORIZON_CAP;
use crate::prob::{
    normalize, Categorical, Precision, PreferenceVector, StochasticMatrix, TransitionModel,
    NORM_TOL,
};
use crate::process::{GenerativeProcess, Phase};

type Matrix = Vec<Vec<f64>>;

fn one() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn default_cap() -> usize {
    DEFAULT_HORIZON_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: String,
    /// Level `n + 1` updates once per `tick_ratio` updates of level `n`.
    #[serde(default = "one")]
    pub tick_ratio: usize,
    /// Likelihood precision of the top level.
    #[serde(default = "one_f64")]
    pub top_gamma: f64,
    #[serde(default = "default_cap")]
    pub horizon_cap: usize,
    /// Lowest (overt) level first.
    pub levels: Vec<LevelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub outcomes: Vec<String>,
    /// Defaults to a single `"null"` action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    #[serde(rename = "A")]
    pub a: Matrix,
    /// One matrix per action; identity when omitted.
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Matrix>>,
    /// Preferred outcomes, normalized on load unless they already sum to
    /// one; uniform when omitted.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// Initial state prior; uniform when omitted.
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    /// Policy prior over the enumerated policies; uniform when omitted.
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(rename = "gamma_G", default, skip_serializing_if = "Option::is_none")]
    pub gamma_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Precision imposed on the level below, one per state of this level.
    /// Required on every level except the lowest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_map: Option<Vec<f64>>,
}

impl LevelSpec {
    pub fn action_labels(&self) -> Vec<String> {
        self.actions
            .clone()
            .unwrap_or_else(|| vec!["null".to_string()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    #[serde(default)]
    pub name: String,
    pub states: Vec<String>,
    pub outcomes: Vec<String>,
    pub initial: Vec<f64>,
    /// Outcomes x states.
    pub emission: Matrix,
    /// One states x states matrix per action.
    pub transitions: Vec<Matrix>,
    /// Scripted phases, cycled in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub label: String,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Matrix>>,
}

/// Parses and fully validates a model spec.
pub fn parse_model_spec(text: &str) -> Result<ModelSpec> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(|e| json_error(text.as_bytes(), e))?;
    spec.validate()?;
    Ok(spec)
}

/// Parses and fully validates a process spec.
pub fn parse_process_spec(text: &str) -> Result<ProcessSpec> {
    let spec: ProcessSpec =
        serde_json::from_str(text).map_err(|e| json_error(text.as_bytes(), e))?;
    spec.validate()?;
    Ok(spec)
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn check_labels(loc: Location, labels: &[String], noun: &str) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::validation(
            loc,
            format!("at least one {noun} is required"),
        ));
    }
    let mut seen = HashSet::new();
    for (i, label) in labels.iter().enumerate() {
        if label.trim().is_empty() {
            return Err(Error::validation(
                loc.clone().at(format!("{noun} {i}")),
                "label is empty",
            ));
        }
        if !seen.insert(label) {
            return Err(Error::validation(
                loc.clone().at(format!("{noun} {i}")),
                format!("duplicate label '{label}'"),
            ));
        }
    }
    Ok(())
}

fn check_entry(loc: &Location, index: String, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::validation(
            loc.clone().at(index),
            format!("entry {x} is not a non-negative number"),
        ));
    }
    Ok(())
}

/// Column-stochastic check with located diagnostics.
fn check_matrix(
    loc: Location,
    m: &Matrix,
    rows: &[String],
    cols: &[String],
    col_noun: &str,
) -> Result<()> {
    if m.len() != rows.len() {
        return Err(Error::validation(
            loc.clone().at("rows"),
            format!("has {} rows, expected {}", m.len(), rows.len()),
        ));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols.len() {
            return Err(Error::validation(
                loc.clone().at(format!("row {i}")),
                format!("has {} entries, expected {}", row.len(), cols.len()),
            ));
        }
        for (j, &x) in row.iter().enumerate() {
            check_entry(&loc, format!("row {i}, column {j}"), x)?;
        }
    }
    for (j, name) in cols.iter().enumerate() {
        let sum: f64 = m.iter().map(|r| r[j]).sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(
                loc.clone().at(format!("column {j} ({col_noun} '{name}')")),
                format!("sums to {}", round9(sum)),
            ));
        }
    }
    Ok(())
}

fn check_vector(loc: Location, v: &[f64], n: usize, must_sum_to_one: bool) -> Result<()> {
    if v.len() != n {
        return Err(Error::validation(
            loc.clone().at("length"),
            format!("has {} entries, expected {n}", v.len()),
        ));
    }
    for (i, &x) in v.iter().enumerate() {
        check_entry(&loc, format!("entry {i}"), x)?;
    }
    let sum: f64 = v.iter().sum();
    if must_sum_to_one && (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::validation(
            loc.clone().at("sum"),
            format!("sums to {}", round9(sum)),
        ));
    }
    if sum <= 0.0 {
        return Err(Error::validation(loc.at("sum"), "has no positive entries"));
    }
    Ok(())
}

fn check_positive(loc: Location, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            loc,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn internal(e: Error) -> Error {
    Error::InvalidModel(format!("validated spec failed to build: {e}"))
}

fn transition_model(mats: &[Matrix]) -> Result<TransitionModel> {
    TransitionModel::new(
        mats.iter()
            .map(|m| StochasticMatrix::from_rows(m))
            .collect::<Result<_>>()?,
    )
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let top = Location::new(None, "levels", None);
        if self.levels.is_empty() || self.levels.len() > DEFAULT_MAX_LEVELS {
            return Err(Error::validation(
                top,
                format!(
                    "has {} levels, expected 1..={DEFAULT_MAX_LEVELS}",
                    self.levels.len()
                ),
            ));
        }
        if self.tick_ratio == 0 {
            return Err(Error::validation(
                Location::new(None, "tick_ratio", None),
                "must be at least 1",
            ));
        }
        check_positive(Location::new(None, "top_gamma", None), self.top_gamma)?;
        if self.horizon_cap == 0 {
            return Err(Error::validation(
                Location::new(None, "horizon_cap", None),
                "must be at least 1",
            ));
        }
        for (i, level) in self.levels.iter().enumerate() {
            self.validate_level(i + 1, level)?;
        }
        Ok(())
    }

    fn validate_level(&self, n: usize, l: &LevelSpec) -> Result<()> {
        let at = |field: &str| Location::level(n, field);
        check_labels(at("states"), &l.states, "state")?;
        check_labels(at("outcomes"), &l.outcomes, "outcome")?;
        let actions = l.action_labels();
        check_labels(at("actions"), &actions, "action")?;

        if n > 1 {
            let below = &self.levels[n - 2];
            if l.outcomes.len() != below.states.len() {
                return Err(Error::validation(
                    at("outcomes").at(format!("coupling to level {}", n - 1)),
                    format!(
                        "{} outcomes, but level {} has {} states",
                        l.outcomes.len(),
                        n - 1,
                        below.states.len()
                    ),
                ));
            }
        }

        check_matrix(at("A"), &l.a, &l.outcomes, &l.states, "state")?;
        if let Some(b) = &l.b {
            if b.len() != actions.len() {
                return Err(Error::validation(
                    at("B").at("actions"),
                    format!(
                        "has {} matrices, expected one per action ({})",
                        b.len(),
                        actions.len()
                    ),
                ));
            }
            for (k, m) in b.iter().enumerate() {
                check_matrix(
                    Location::level(n, format!("B[{}]", actions[k])),
                    m,
                    &l.states,
                    &l.states,
                    "state",
                )?;
            }
        } else if actions.len() != 1 {
            return Err(Error::validation(
                at("B"),
                "required when a level has more than one action",
            ));
        }
        if let Some(c) = &l.c {
            check_vector(at("C"), c, l.outcomes.len(), false)?;
        }
        if let Some(d) = &l.d {
            check_vector(at("D"), d, l.states.len(), true)?;
        }
        let horizon = l.horizon.unwrap_or(1);
        if horizon == 0 || horizon > self.horizon_cap {
            return Err(Error::validation(
                at("horizon"),
                format!("{horizon} is outside 1..={}", self.horizon_cap),
            ));
        }
        if let Some(e) = &l.e {
            let policies = actions.len().pow(horizon as u32);
            check_vector(at("E"), e, policies, true)?;
        }
        if let Some(g) = l.gamma_g {
            check_positive(at("gamma_G"), g)?;
        }
        match (&l.precision_map, n) {
            (Some(_), 1) => {
                return Err(Error::validation(
                    at("precision_map"),
                    "the lowest level has no level below",
                ))
            }
            (None, n) if n > 1 => {
                return Err(Error::validation(
                    at("precision_map"),
                    "required above the lowest level",
                ))
            }
            (Some(map), _) => {
                if map.len() != l.states.len() {
                    return Err(Error::validation(
                        at("precision_map").at("length"),
                        format!(
                            "has {} entries, expected one per state ({})",
                            map.len(),
                            l.states.len()
                        ),
                    ));
                }
                for (i, &g) in map.iter().enumerate() {
                    check_positive(
                        at("precision_map").at(format!("state {i} ('{}')", l.states[i])),
                        g,
                    )?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Builds the agent described by this spec (uninitialized).
    pub fn build(&self) -> Result<HierarchicalAgent> {
        self.validate()?;
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| self.build_level(i, l))
            .collect::<Result<Vec<_>>>()
            .map_err(internal)?;
        let couplings = self.levels[1..]
            .iter()
            .map(|l| PrecisionMap::from_f64(l.precision_map.as_deref().unwrap_or_default()))
            .collect::<Result<Vec<_>>>()
            .map_err(internal)?;
        HierarchicalAgent::new(
            self.name.clone(),
            levels,
            couplings,
            self.tick_ratio,
            Precision::new(self.top_gamma)?,
        )
        .map_err(internal)
    }

    fn build_level(&self, i: usize, l: &LevelSpec) -> Result<GenerativeModel> {
        let a = StochasticMatrix::from_rows(&l.a)?;
        let b = match &l.b {
            Some(b) => transition_model(b)?,
            None => TransitionModel::identity(l.states.len())?,
        };
        let c = match &l.c {
            Some(c) => Categorical::new(c.clone()).or_else(|_| normalize(c))?,
            None => Categorical::uniform(l.outcomes.len())?,
        };
        let d = match &l.d {
            Some(d) => Categorical::new(d.clone())?,
            None => Categorical::uniform(l.states.len())?,
        };
        let e = l.e.clone().map(Categorical::new).transpose()?;
        GenerativeModel::new(ModelParts {
            name: l.name.clone().unwrap_or_else(|| format!("level {}", i + 1)),
            labels: Labels {
                states: l.states.clone(),
                outcomes: l.outcomes.clone(),
                actions: l.action_labels(),
            },
            a,
            b,
            c: PreferenceVector::new(c),
            d,
            e,
            gamma_g: Precision::new(l.gamma_g.unwrap_or(1.0))?,
            horizon: l.horizon.unwrap_or(1),
            horizon_cap: self.horizon_cap,
        })
    }
}

impl HierarchicalAgent {
    /// Writes the agent back out as a fully explicit spec.
    pub fn to_spec(&self) -> ModelSpec {
        let levels = self
            .levels()
            .iter()
            .enumerate()
            .map(|(i, m)| LevelSpec {
                name: Some(m.name().to_string()),
                states: m.labels().states.clone(),
                outcomes: m.labels().outcomes.clone(),
                actions: Some(m.labels().actions.clone()),
                a: m.likelihood().to_rows(),
                b: Some(
                    m.transitions()
                        .per_action()
                        .iter()
                        .map(StochasticMatrix::to_rows)
                        .collect(),
                ),
                c: Some(m.preferences().dist().probs().to_vec()),
                d: Some(m.initial_prior().probs().to_vec()),
                e: Some(m.policy_prior().probs().to_vec()),
                gamma_g: Some(m.gamma_g().value()),
                horizon: Some(m.horizon()),
                precision_map: (i > 0).then(|| self.couplings()[i - 1].as_f64()),
            })
            .collect();
        ModelSpec {
            name: self.name().to_string(),
            tick_ratio: self.tick_ratio(),
            top_gamma: self.top_gamma().value(),
            horizon_cap: DEFAULT_HORIZON_CAP
                .max(self.levels().iter().map(|m| m.horizon()).max().unwrap_or(1)),
            levels,
        }
    }
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        let at = |field: &str| Location::new(None, field, None);
        check_labels(at("states"), &self.states, "state")?;
        check_labels(at("outcomes"), &self.outcomes, "outcome")?;
        check_vector(at("initial"), &self.initial, self.states.len(), true)?;
        check_matrix(
            at("emission"),
            &self.emission,
            &self.outcomes,
            &self.states,
            "state",
        )?;
        if self.transitions.is_empty() {
            return Err(Error::validation(
                at("transitions"),
                "at least one action is required",
            ));
        }
        for (k, m) in self.transitions.iter().enumerate() {
            check_matrix(
                at(&format!("transitions[{k}]")),
                m,
                &self.states,
                &self.states,
                "state",
            )?;
        }
        for (p, phase) in self.phases.iter().enumerate() {
            let loc = Location::new(None, format!("phases[{p}]"), None);
            if phase.length == 0 {
                return Err(Error::validation(
                    loc.clone().at("length"),
                    "must be at least 1",
                ));
            }
            if let Some(ts) = &phase.transitions {
                if ts.len() != self.transitions.len() {
                    return Err(Error::validation(
                        loc.at("transitions"),
                        format!(
                            "has {} matrices, expected {}",
                            ts.len(),
                            self.transitions.len()
                        ),
                    ));
                }
                for (k, m) in ts.iter().enumerate() {
                    check_matrix(
                        Location::new(None, format!("phases[{p}].transitions[{k}]"), None),
                        m,
                        &self.states,
                        &self.states,
                        "state",
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<GenerativeProcess> {
        self.validate()?;
        let phases = self
            .phases
            .iter()
            .map(|p| {
                Ok(Phase {
                    label: p.label.clone(),
                    length: p.length,
                    transitions: p.transitions.as_deref().map(transition_model).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GenerativeProcess::new(
            self.name.clone(),
            self.states.clone(),
            self.outcomes.clone(),
            Categorical::new(self.initial.clone())?,
            StochasticMatrix::from_rows(&self.emission)?,
            transition_model(&self.transitions)?,
            phases,
        )
        .map_err(internal)
    }
}
