use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field has no involution (odd extension degree)")]
    NoInvolution,
    #[error("unsupported field GF({p}^{e})")]
    UnsupportedField { p: u32, e: u32 },
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("dimension {dim} out of range 0..={max}")]
    DimensionOutOfRange { dim: usize, max: usize },
    #[error("orthogonal form in odd dimension over a field of even order is degenerate")]
    UnsupportedDegenerate,
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("subspace is not singular")]
    NotSingular,
    #[error("subspaces have different dimensions: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("pair ({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("matrix does not preserve the form")]
    NotAnIsometry,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("refused: {vertices} vertices exceeds the budget of {budget}")]
    Refused { vertices: usize, budget: usize },
    #[error("polynomial division left a nonzero remainder")]
    NonExactDivision,
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}
