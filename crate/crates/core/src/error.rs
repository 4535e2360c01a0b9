use thiserror::Error;

/// Errors shared across the crate. Every operation that can refuse its input
/// reports why through one of these variants; none of them is used for
/// "search found nothing" (that is a [`crate::largeness::Verdict`], not an error).
#[derive(Debug, Error)]
pub enum Error {
    #[error("model mismatch: expected {expected}, found {found}")]
    ModelMismatch { expected: String, found: String },

    #[error("not a probability measure: {0}")]
    NotAMeasure(String),

    #[error("support cap exceeded: needed {needed} elements, cap is {cap}")]
    SupportCapExceeded { needed: usize, cap: usize },

    #[error("enumeration budget exceeded: {needed} elements, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("homomorphism is identically zero")]
    ZeroHomomorphism,

    #[error("malformed boundary point: {0}")]
    MalformedBoundaryPoint(String),

    #[error("carving schedule removes {removed} but only {allowed} is available")]
    InfeasibleSchedule { removed: String, allowed: String },

    #[error("set is not proper: {0}")]
    NotProper(String),

    #[error("set is conull, nothing to descend into")]
    Conull,

    #[error("search budget exhausted: {0}")]
    SearchBudget(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported for this model: {0}")]
    Unsupported(String),

    #[error("replay violation: {0}")]
    Violation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
