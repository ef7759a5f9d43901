use thiserror::Error;

/// Errors surfaced by kernel construction, determinant evaluation and the
/// orthogonal-polynomial machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("window [{lo}, {hi}] too small: {what}")]
    WindowTooSmall { lo: i64, hi: i64, what: String },

    #[error("contour quadrature did not converge below {target:e} after {points} points")]
    QuadratureDivergence { points: usize, target: f64 },

    #[error("determinant did not converge: last delta {delta:e} at block size {m}")]
    NoConvergence { delta: f64, m: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned moment system at index {index} (s = {s})")]
    IllConditioned { index: usize, s: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
