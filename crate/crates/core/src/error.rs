use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("index sets overlap or do not cover 0..{len}")]
    InvalidPartition { len: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficients are not in the product of simplices: {0}")]
    NotConvexCoefficients(String),
    #[error("no convex coefficients combine the families to zero")]
    Infeasible,
    #[error("vertex search stalled: {0}")]
    NumericallyDegenerate(String),
    #[error("point is not a vertex of the zero-sum polytope: {0}")]
    NotAVertex(String),
    #[error("vector {column} has norm {norm} outside the unit ball")]
    OutsideBall { column: usize, norm: f64 },
    #[error("skeleton round failed after {runs} independent runs")]
    RestartsExhausted { runs: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("family {family} has {above} coefficients above the snapping threshold")]
    AmbiguousFamily { family: usize, above: usize },
    #[error("enumeration of {count} selections exceeds budget {budget}")]
    BudgetExceeded { count: u128, budget: u64 },
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("achieved norm {achieved} exceeds the bound {bound}")]
    BoundViolated { achieved: f64, bound: f64 },
    #[error("unsupported generator input: {0}")]
    Generator(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
