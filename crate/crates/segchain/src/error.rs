use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability {value}: must lie in [0, 1]")]
    InvalidProbability { value: String },

    #[error("cannot parse {input:?} as a rational number")]
    ParseRational { input: String },

    #[error("state set is empty")]
    EmptyStateSet,

    #[error("duplicate state label {label:?}")]
    DuplicateState { label: String },

    #[error("unknown state label {label:?}")]
    UnknownState { label: String },

    #[error("duplicate transition {from:?} -> {to:?}")]
    DuplicateTransition { from: String, to: String },

    #[error("row {state:?} sums to {sum}, expected exactly 1")]
    RowSumNotOne { state: String, sum: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("distribution weights sum to {sum}, expected exactly 1")]
    WeightSumNotOne { sum: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mixing time search exceeded cap of {cap} steps")]
    SearchCapExceeded { cap: u64 },

    #[error(
        "chain has no state-wise limit: recurrent class {witness:?} is not a single absorbing state"
    )]
    NoAbsorbingLimit { witness: String },

    #[error("stationary distribution is not unique or does not exist")]
    NoUniqueStationary,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("coupling kernel row for pair ({x}, {y}) at step {step} is missing")]
    MissingKernelRow { x: String, y: String, step: usize },

    #[error("coupling kernel row for pair ({x}, {y}) sums to {sum}, expected exactly 1")]
    KernelRowSumNotOne { x: String, y: String, sum: String },

    #[error("coupling is not faithful: {witness}")]
    NotFaithful { witness: String },

    #[error("coupling is not marginal-correct: {witness}")]
    MarginalViolation { witness: String },

    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: usize, got: usize },

    #[error("state space of size {n} exceeds the {max}-state limit for subset sequences")]
    StateSpaceTooLarge { n: usize, max: usize },

    #[error("cyclic shift offset {offset} out of range 0..={max}")]
    ShiftOutOfRange { offset: usize, max: usize },

    #[error("enumeration budget of {budget} leaves exceeded")]
    EnumerationBudgetExceeded { budget: u64 },

    #[error("no non-trivial separating sequence exists")]
    NoNontrivialSequence,

    #[error("trajectory cap of {cap} paths exceeded")]
    TrajectoryCapExceeded { cap: usize },

    #[error("chain is not a birth-and-death chain: {reason}")]
    NotBirthDeath { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::MalformedFile(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error reports an exhausted search/enumeration budget
    /// rather than invalid input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::EnumerationBudgetExceeded { .. }
                | Error::TrajectoryCapExceeded { .. }
                | Error::SearchCapExceeded { .. }
        )
    }
}
