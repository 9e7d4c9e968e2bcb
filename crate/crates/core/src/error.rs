use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of the operation (time outside the
    /// knot range, basis index out of bounds, derivative order too high...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An object could not be built because its invariants do not hold.
    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("singular interpolation system (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("no feasible individual found (best total violation {best_violation:.4e})")]
    Infeasible { best_violation: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trace parse error: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn construction(msg: impl Into<String>) -> Error {
    Error::Construction(msg.into())
}
