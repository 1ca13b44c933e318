//! Error types shared across the engine.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("index {index} out of range 1..={nvars}")]
    IndexOutOfRange { index: u8, nvars: u8 },
    #[error("variable specifications do not match")]
    VarSpecMismatch,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("index sequence is not canonical: {0}")]
    NotCanonical(String),
    #[error("element is not parity-homogeneous")]
    NotHomogeneous,
    #[error("algebra mismatch")]
    AlgebraMismatch,
    #[error("no realization declared for this algebra")]
    NoRealization,
    #[error("truncation overflow: result degree {got} exceeds cap {cap}")]
    TruncationOverflow { got: i64, cap: i64 },
    #[error("assumption violated: {0}")]
    AssumptionFailed(String),
    #[error("inconsistent module data: {0}")]
    InconsistentModule(String),
    #[error("map is not a module morphism: {0}")]
    NotAMorphism(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("{0}")]
    Invalid(String),
}
