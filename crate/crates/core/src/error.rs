use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm = {norm})")]
    Unnormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid factor selection: {0}")]
    InvalidFactors(String),

    #[error("unknown transition label `{0}` (expected `0-2` or `0-1`)")]
    InvalidTransition(String),

    #[error("thermal truncation leakage {leakage:e} exceeds {limit:e} at n_max = {n_max}")]
    TruncationLeakage { leakage: f64, limit: f64, n_max: usize },

    #[error(
        "integrator did not converge after {halvings} halvings \
         (last endpoint change {last_change:e}, tolerance {tolerance:e})"
    )]
    NonConvergence { halvings: u32, last_change: f64, tolerance: f64 },

    #[error("entanglement entropy is not defined for a mixed pair state (purity {purity})")]
    MixedState { purity: f64 },
}
