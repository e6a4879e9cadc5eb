use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("non-finite value {value} on chart {chart} at node {node}")]
    NonFinite { chart: usize, node: usize, value: f64 },

    #[error("unsupported manifold: {0}")]
    UnsupportedManifold(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:.3e}): {reason}")]
    Solver {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
