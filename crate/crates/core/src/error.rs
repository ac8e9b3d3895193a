use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module of the core.
///
/// Variants map onto the command-line exit codes: `Parameter`, `Domain`
/// and `Format` are validation failures, the rest are numerical failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed input at row {row}: {msg}")]
    Format { row: usize, msg: String },

    #[error("model validation failed: {0}")]
    Model(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("overflow evaluating e^(λz) at λ = {lambda}, z = {z}")]
    Range { lambda: String, z: f64 },

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("series did not converge: {0}")]
    Convergence(String),

    #[error("indeterminate ratio: {0}")]
    IndeterminateRatio(String),

    #[error("simulation rejected: {0}")]
    Simulation(String),
}

impl Error {
    /// True for failures caused by inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Domain(_) | Error::Format { .. } | Error::Model(_)
        )
    }
}
