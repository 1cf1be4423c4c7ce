use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transform input must not be empty")]
    EmptyInput,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("diffusivity mismatch: {from} vs {to}")]
    DiffusivityMismatch { from: f64, to: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coarsening factor {factor} does not divide {steps} steps")]
    NonDivisorFactor { factor: usize, steps: usize },

    #[error("cannot keep {requested} modes of a lattice with {available}")]
    TooManyModes { requested: usize, available: usize },

    #[error("step index {index} out of range for {steps} steps")]
    StepOutOfRange { index: usize, steps: usize },

    #[error("coefficient function returned a non-finite value at x = {x}, y = {y}")]
    NonFiniteCoefficient { x: f64, y: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("problem has no regularity exponents")]
    MissingRegularity,

    #[error("the Milstein scheme needs the derivative of the diffusion coefficient")]
    MissingDerivative,

    #[error("state became non-finite at step {step}")]
    Overflow { step: usize },

    #[error("invalid level plan: {0}")]
    InvalidPlan(String),

    #[error("path {path} failed: {source}")]
    PathFailed {
        path: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
