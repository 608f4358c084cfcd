use thiserror::Error;

/// Errors produced by the numerical library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is indefinite: eigenvalue {eigenvalue:.6e} below -{tol:.1e} * lambda_max ({lambda_max:.6e})")]
    IndefiniteMatrix {
        eigenvalue: f64,
        lambda_max: f64,
        tol: f64,
    },

    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation coefficient {0} outside [0, 1)")]
    InvalidCorrelation(f64),

    #[error("tier levels must satisfy lo < mid < hi, got ({lo}, {mid}, {hi})")]
    TierLevelsNotOrdered { lo: f64, mid: f64, hi: f64 },

    #[error("pilot subcarrier {0} listed more than once")]
    DuplicateSubcarrier(usize),

    #[error("pilot subcarrier {index} outside 1..={n_c}")]
    IndexOutOfRange { index: usize, n_c: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear system (A^H A + I) could not be factorized")]
    SingularSystem,

    #[error("distortion {d} outside the closed-form range: {bound}")]
    DistortionOutOfRange { d: f64, bound: String },

    #[error("distortion {d} does not exceed the MMSE floor d_min = {d_min}; rate is infinite")]
    DistortionBelowMmse { d: f64, d_min: f64 },

    #[error("water-filling budget must be positive, got {0}")]
    BudgetNonpositive(f64),

    #[error("water-filling result has {found} modes but the estimate covariance has rank {expected}")]
    RankMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("channel covariance is singular (rank {rank} < {n})")]
    SingularCovariance { rank: usize, n: usize },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("trial {index} (seed {seed:#018x}) failed: {source}")]
    TrialFailed {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{skipped} of {trials} draws had d <= d_min (more than 20%)")]
    TooManySkipped { skipped: usize, trials: usize },

    #[error("matrix text format: line {line}: {message}")]
    MatrixFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
