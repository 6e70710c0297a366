use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Location-annotated syntax error from the network or config parsers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(#[from] ParseError),
    #[error("unknown species `{name}` (line {line})")]
    UnknownSpecies { name: String, line: usize },
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("nonpositive {what}: {value}")]
    NonPositive { what: String, value: f64 },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative input component {index}: {value}")]
    NegativeInput { index: usize, value: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("monomial not differentiable at u[{species}] = 0 with exponent {exponent}")]
    NonDifferentiable { species: usize, exponent: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconsistent constraint count: {equations} equations for {unknowns} unknowns")]
    InconsistentConstraints { equations: usize, unknowns: usize },
    #[error("support enumeration guard exceeded: {species} species (limit {limit})")]
    EnumerationGuard { species: usize, limit: usize },
    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },
    #[error("negative value {value:e} below positivity floor at time {time}")]
    Negativity { value: f64, time: f64 },
    #[error("time step underflow: dt = {dt:e} below dt_min at t = {time}")]
    StepUnderflow { dt: f64, time: f64 },
    #[error("non-finite field value at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("checkpoint: bad magic bytes")]
    CheckpointMagic,
    #[error("checkpoint: unsupported format version {found} (expected {expected})")]
    CheckpointVersion { found: u16, expected: u16 },
    #[error("checkpoint: checksum mismatch or truncated payload")]
    CheckpointChecksum,
    #[error("checkpoint: malformed payload: {0}")]
    CheckpointPayload(String),
    #[error("too few data points: {got} (need {need})")]
    TooFewPoints { got: usize, need: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
