use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum SgbmError {
    #[error("matrix is not positive definite: pivot {pivot} is non-positive")]
    NotPositiveDefinite { pivot: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("simulation overflow: non-finite state at path {path}, step {step}")]
    SimulationOverflow { path: usize, step: usize },

    #[error("non-finite regression data at path {path}")]
    NonFiniteData { path: usize },

    #[error(
        "unsupported (basis, scheme) pairing: {basis} with {scheme}; supported pairings are \
         Monomials x Euler (1-d), WeightedSumPowers x GbmEuler, GeometricMeanPowers x ExactGbm"
    )]
    UnsupportedPairing { basis: String, scheme: String },

    #[error("domain error: {context}")]
    Domain { context: String },

    #[error("backward step failed: non-finite value at step {step}, bundle {bundle}, path {path}")]
    StepFailure {
        step: usize,
        bundle: usize,
        path: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SgbmError>;
