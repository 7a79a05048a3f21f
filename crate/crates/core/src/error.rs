use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("inconsistent subsystem layout: {0}")]
    Subsystems(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid trace {0}")]
    BadTrace(f64),

    #[error("state is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("state vector norm deviates from one by {0:e}")]
    BadNorm(f64),

    #[error("Kraus operators exceed the identity (max excess eigenvalue {0:e})")]
    KrausExceedsIdentity(f64),

    #[error("Kraus set is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("measurement is incomplete (deviation from identity {0:e})")]
    IncompleteMeasurement(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trial acceptance probability is zero")]
    ZeroAcceptance,

    #[error("expected number of trials diverges")]
    Divergent,

    #[error("heralded success probability is zero")]
    ZeroSuccess,

    #[error("residual excited-state population {0:e} after the pi pulse")]
    ExcitedPopulation(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
