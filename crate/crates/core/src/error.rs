//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while evaluating an expression or a derived formula at a
/// point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive value")]
    LogOfNonPositive,
    #[error("transcendental function evaluated in exact mode")]
    TranscendentalInExactMode,
    #[error("point has dimension {got}, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("singular matrix")]
    SingularMatrix,
}

/// Errors raised while parsing an expression from text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("coordinate index {index} out of range 1..={dim} at byte {offset}")]
    CoordinateOutOfRange {
        offset: usize,
        index: usize,
        dim: usize,
    },
}

/// Errors raised when assembling or combining geometric data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension {0} is too small; need n >= 2")]
    DimensionTooSmall(usize),
    #[error("exact mode requested but a coefficient field requires floats")]
    ExactModeUnavailable,
    #[error("missing Christoffel entry {0}")]
    MissingEntry(String),
    #[error("group element upper part must be the identity")]
    UpperNotIdentity,
    #[error("parameters contradict the example's case split: {0}")]
    InvalidBranch(String),
    #[error("no start converged within {0} iterations")]
    ConvergenceFailure(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
