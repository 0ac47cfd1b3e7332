use std::fmt;

use thiserror::Error;

/// A single field-level problem found while validating an experiment config.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("transition density is a point mass at t = 0")]
    DegenerateDensity,

    #[error("path diverged at step {step}")]
    Divergence { step: usize },

    #[error("divergence budget exceeded: {diverged} of {total} paths diverged")]
    DivergenceBudget { diverged: usize, total: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid too short: need at least {min} points, got {got}")]
    GridTooShort { min: usize, got: usize },

    #[error("payoff rejected at y = {at}: {reason}")]
    PayoffRejected { at: f64, reason: String },

    #[error("{0}")]
    NonIntegrable(String),

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("config rejected: {}", join_fields(.0))]
    Config(Vec<FieldError>),

    #[error("refusing to overwrite existing output directory {0}")]
    OutputExists(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_fields(errs: &[FieldError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
