use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("state space of {states} states exceeds the enumeration cap of {cap}")]
    StateSpaceCap { states: usize, cap: usize },

    #[error("{what} needs {needed} amplitudes, cap is {cap}")]
    MemoryCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("exponent out of range: beta * energy = {0}")]
    Overflow(f64),

    #[error("schedule bisection did not converge (interval {width:e} after {iterations} iterations)")]
    Bisection { width: f64, iterations: usize },

    #[error("schedule violation: {0}")]
    Schedule(String),

    #[error("row {row} is not stochastic (sum {sum}, min entry {min})")]
    NotStochastic { row: usize, sum: f64, min: f64 },

    #[error("chain is not reversible: symmetrised asymmetry {0:e}")]
    NonReversible(f64),

    #[error("spectral gap {gap:e} is below the minimum {min:e}")]
    SmallGap { gap: f64, min: f64 },

    #[error("operator is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("spectral decomposition failed: {0}")]
    Spectral(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the resource-guard family (state space or amplitude caps).
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::StateSpaceCap { .. } | Error::MemoryCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
