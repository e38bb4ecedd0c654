use thiserror::Error;

/// Errors produced by the differentiator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("root set is not closed under complex conjugation (unpaired root {re}{im:+}i)")]
    NotConjugateClosed { re: f64, im: f64 },

    #[error("root polishing did not converge (residual {residual:e} at {re}{im:+}i)")]
    ConvergenceFailure { re: f64, im: f64, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observability matrix is singular")]
    Singular,

    #[error("continuous root {re}{im:+}i does not have a negative real part")]
    UnstableRoot { re: f64, im: f64 },

    #[error("matrix is not Schur stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("Q must have minimum eigenvalue > 1 (got {min_eigenvalue})")]
    InvalidQ { min_eigenvalue: f64 },

    #[error("Lyapunov iteration did not converge after {iterations} iterations")]
    LyapunovNoConvergence { iterations: usize },

    #[error("state entry {index} left the finite range ({value}) at step {step}")]
    NonFinite { step: u64, index: usize, value: f64 },

    #[error("run diverged at step {step}: {source}")]
    Diverged { step: u64, source: Box<Error> },

    #[error("records carry no ground truth")]
    NoTruth,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
