use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed lattice description or inconsistent arguments.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A parameter outside the domain of the formula (e.g. p outside [0, 1]).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cell index {index} out of range for volume {volume}")]
    Range { index: usize, volume: usize },

    /// A guard on the counting engine was exceeded; `bound` names the guard.
    #[error("capacity exceeded: {bound} is {actual}, limit {limit}")]
    Capacity {
        bound: &'static str,
        actual: usize,
        limit: usize,
    },

    /// Requested a truncation order for which no coefficients are tabulated.
    #[error("unsupported order {requested} for {series}; available {min}..={max}")]
    UnsupportedOrder {
        series: &'static str,
        requested: usize,
        min: usize,
        max: usize,
    },

    #[error("no configurations with {k} dimers on {spec}")]
    InfeasibleDensity { spec: String, k: usize },

    #[error("least-squares fit failed: {0}")]
    Fit(String),
}
