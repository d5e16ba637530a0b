use thiserror::Error;

/// Errors raised by the bound builders and their numerical back ends.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),
    #[error("variable sets overlap on {0}")]
    OverlappingSets(String),
    #[error("dense table of {cells} cells exceeds the limit of {limit}")]
    TableTooLarge { cells: u128, limit: u128 },
    #[error("malformed channel kernel: {0}")]
    InvalidKernel(String),
    #[error("conditioning block is singular (condition number {condition:.3e})")]
    SingularConditioning { condition: f64 },
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid auxiliaries: {0}")]
    InvalidAuxiliaries(String),
    #[error("limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("rate oracle cannot evaluate {0}")]
    RateOracle(String),
}

impl Error {
    /// True for numerical/solver failures, as opposed to malformed input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Solver(_) | Error::SingularConditioning { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
