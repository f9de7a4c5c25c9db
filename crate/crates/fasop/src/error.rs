use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the supported domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit the subdivision limit before reaching the
    /// requested tolerance. Carries the best estimate and its error bound.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    /// Series or continued fraction failed to converge within the term budget.
    #[error("convergence failure in {0}")]
    Convergence(&'static str),

    /// Invalid configuration (file or flag level).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
