use thiserror::Error;

/// Errors produced by the simulation, quadrature, oracle, and fitting layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {field}: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("invalid dressed state (n={n}, i={i}): branch 3 exists only at n=0")]
    InvalidDressedState { n: u64, i: u8 },

    #[error(
        "infrared-divergent kernel: {kernel} is undefined for the flat spectral density{context}"
    )]
    InfraredDivergent { kernel: &'static str, context: String },

    #[error("quadrature did not converge: achieved error estimate {achieved:.3e} exceeds tolerance {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("cutoff {cutoff} too small: tail mass {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    InsufficientCutoff { cutoff: usize, tail: f64, tolerance: f64 },

    #[error("truncation budget exceeded: {context} (residual {residual:.3e})")]
    TruncationBudget { context: String, residual: f64 },

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:.6e}); best-so-far rates: {best:?}")]
    FitNonConvergence {
        iterations: usize,
        residual_norm: f64,
        best: Vec<f64>,
    },

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("power-law fit needs at least 2 positive rates, got {0}")]
    TooFewRates(usize),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Exit-status class for the CLI: 1 for validation problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureNonConvergence { .. }
            | Error::TruncationBudget { .. }
            | Error::FitNonConvergence { .. }
            | Error::IllConditionedFit(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
