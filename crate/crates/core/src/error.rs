use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Variants name the precondition that was violated so the command line
/// front end can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("weight supremum diverges on the horizon: {0}")]
    DivergentWeight(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("negative time t = {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("abscissa violation: {0}")]
    Abscissa(String),
    #[error("tail budget exceeded: {0}")]
    TailBudget(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("quotient not evaluatable; radical case: {0}")]
    Radical(String),
    #[error("not diagonalizable: {0}")]
    Defective(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("function class check failed: {0}")]
    ClassCheck(String),
    #[error("aliasing budget exceeded: {0}")]
    Aliasing(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
