use thiserror::Error;

use crate::model::Violation;

/// Errors raised while building or perturbing a world.
///
/// `path` fields are JSON pointers into the scenario layout
/// (`/materials/2/suppliers/0/material`), so loader diagnostics can point
/// at the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{path}: duplicate id `{id}`")]
    DuplicateId { path: String, id: String },

    #[error("{path}: unknown {kind} `{id}`")]
    UnknownId { path: String, kind: &'static str, id: String },

    #[error("bill of materials contains a cycle: {}", cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },

    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("{path}: day {day} lies outside the {horizon}-day horizon")]
    DayOutOfHorizon { path: String, day: u32, horizon: u32 },

    #[error("initial schedule is infeasible: {0}")]
    InfeasibleBaseline(Violation),

    #[error("invalid event: {0}")]
    InvalidEvent(String),
}

impl ModelError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid { path: path.into(), message: message.into() }
    }

    /// JSON pointer of the offending value, when the error has one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ModelError::DuplicateId { path, .. }
            | ModelError::UnknownId { path, .. }
            | ModelError::Invalid { path, .. }
            | ModelError::DayOutOfHorizon { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("malformed problem: {0}")]
    Malformed(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("problem mode is {actual}, solver expects {expected}")]
    WrongMode { expected: &'static str, actual: &'static str },

    #[error("instance too large for enumeration ({size} > {bound})")]
    TooLarge { size: u128, bound: u128 },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("`{0}` is not a material agent")]
    NotMaterialAgent(String),

    #[error("`{0}` is not a capacity agent")]
    NotCapacityAgent(String),

    #[error("proposal from `{from}` references unknown order `{order}`")]
    UnknownOrder { from: String, order: String },

    #[error("proposal from `{from}` to `{to}` is inconsistent: {reason}")]
    InconsistentProposal { from: String, to: String, reason: String },

    #[error("invalid engine config: {0}")]
    InvalidConfig(String),

    #[error("stabilized schedule failed the feasibility check: {0}")]
    Infeasible(Violation),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid generator parameters: {0}")]
    Params(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    /// JSON pointer of the offending value, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            ScenarioError::Schema { path, .. } => Some(path),
            ScenarioError::Model(e) => e.path(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("baseline and result describe different networks: {0}")]
    Mismatch(String),
}
