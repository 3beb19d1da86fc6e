use std::fmt;

use thiserror::Error;

/// Where in a model or process spec a validation problem was found.
///
/// Levels are 1-based (level 1 is the overt, lowest level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub level: Option<usize>,
    pub field: String,
    pub index: Option<String>,
}

impl Location {
    pub fn new(level: Option<usize>, field: impl Into<String>, index: Option<String>) -> Self {
        Self {
            level,
            field: field.into(),
            index,
        }
    }

    pub fn level(level: usize, field: impl Into<String>) -> Self {
        Self::new(Some(level), field, None)
    }

    pub fn at(mut self, index: impl Into<String>) -> Self {
        self.index = Some(index.into());
        self
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(level) => write!(f, "level {level}, {}", self.field)?,
            None => write!(f, "{}", self.field)?,
        }
        if let Some(index) = &self.index {
            write!(f, ", {index}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero total mass: cannot normalize")]
    ZeroMass,

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("non-finite entry at index {index}")]
    NonFiniteInput { index: usize },

    #[error("empty distribution")]
    Empty,

    #[error("entries sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("precision must be positive and finite, got {0}")]
    InvalidPrecision(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown action {action} (model has {n_actions} actions)")]
    UnknownAction { action: usize, n_actions: usize },

    #[error("empty policy set")]
    EmptyPolicySet,

    #[error("agent beliefs are not initialized")]
    UninitializedAgent,

    #[error("step {0} not found in trace")]
    StepNotFound(usize),

    #[error("no planning block at step {0}")]
    NoPlanningAtStep(usize),

    #[error("sequence error: {0}")]
    Sequence(String),

    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("{location}: {message}")]
    Validation { location: Location, message: String },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            found,
        }
    }

    pub(crate) fn validation(location: Location, message: impl Into<String>) -> Self {
        Error::Validation {
            location,
            message: message.into(),
        }
    }

    /// Parse and validation failures, as opposed to runtime failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
