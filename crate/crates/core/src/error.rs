use crate::symexpr::SymError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Sym(#[from] SymError),
    /// An identity that holds by construction failed; signals a convention bug.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not strictly hyperbolic: lambda1 - lambda2 vanishes identically")]
    NotStrictlyHyperbolic,
    #[error("linearly degenerate: {0} vanishes identically")]
    LinearlyDegenerate(String),
    #[error("slot {0} out of range or of the wrong variance")]
    Slot(usize),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
