//! Error types shared across the crate.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::space::SpaceDescriptor;

/// Diagnostic payload for iterative procedures that exhaust their budget.
#[derive(Debug, Clone)]
pub struct ConvergenceFailure<S: Scalar> {
    /// Iterations (or sweeps, or doublings) performed before giving up.
    pub iterations: u64,
    /// Last observed residual or successive-iterate gap.
    pub residual: S,
    /// Serialized form of the last iterate, when one exists.
    pub last_iterate: Option<String>,
    /// Objective values per sweep; populated by block-coordinate solvers.
    pub objective_history: Vec<S>,
}

impl<S: Scalar> ConvergenceFailure<S> {
    pub fn new(iterations: u64, residual: S) -> Self {
        ConvergenceFailure {
            iterations,
            residual,
            last_iterate: None,
            objective_history: Vec::new(),
        }
    }

    pub fn with_last(mut self, serialized: String) -> Self {
        self.last_iterate = Some(serialized);
        self
    }

    pub fn with_history(mut self, history: Vec<S>) -> Self {
        self.objective_history = history;
        self
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error<S: Scalar> {
    /// Two points (or a point and a set/map/kernel) live in different spaces.
    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch {
        expected: SpaceDescriptor,
        found: SpaceDescriptor,
    },

    /// A parameter is outside its stated domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value failed a construction-time invariant.
    #[error("invalid construction: {0}")]
    Invalid(String),

    /// An iteration hit its cap before meeting its tolerance.
    #[error("no convergence after {} iterations (residual {})", .0.iterations, .0.residual)]
    NoConvergence(ConvergenceFailure<S>),

    /// Text input could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl<S: Scalar> Error<S> {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }

    pub fn mismatch(expected: &SpaceDescriptor, found: &SpaceDescriptor) -> Self {
        Error::SpaceMismatch {
            expected: expected.clone(),
            found: found.clone(),
        }
    }
}
