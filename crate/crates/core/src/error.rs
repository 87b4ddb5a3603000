use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is numerically singular (pivot {pivot:.3e} at step {step})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("iteration did not converge after {iterations} iterations: {what}")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("matrix exponential overflows the representable range")]
    Overflow,

    #[error("eigenvalue {re:.6e}{im:+.6e}i lies on the singular set of {function}")]
    SpectrumOnSingularSet { function: String, re: f64, im: f64 },

    #[error("eigenvector matrix is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditionedEigenvectors { condition: f64 },

    #[error("shift {shift} coincides with the spectrum: (I - A/shift) is singular")]
    SingularShift { shift: f64 },

    #[error("zero is not an admissible shift")]
    ZeroShift,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serious breakdown at step {step}: smallest singular value {sigma_min:.3e} of W^T V")]
    SeriousBreakdown { step: usize, sigma_min: f64 },

    #[error("rank deflation at step {step}: QR diagonal {diag:.3e}")]
    RankDeflation { step: usize, diag: f64 },

    #[error("K_m is numerically singular")]
    SingularK,

    #[error("evaluation point {z} hits a pole of the nodal function")]
    PoleHit { z: f64 },

    #[error("all candidate intervals for pole selection have zero width")]
    DegenerateBracket,

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
