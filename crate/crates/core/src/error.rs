//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix handed to the eigensolver was not symmetric within tolerance.
    #[error("matrix not symmetric: max |a_ij - a_ji| = {max_asym:.3e} exceeds {tol:.3e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    /// Non-finite data where finite values are required.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// The eigensolver did not converge within its iteration budget.
    #[error("eigensolver failed to converge: off-diagonal residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    /// A spectrum was too degenerate for the requested operation.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// Monitoring/detector configuration rejected at build time.
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),

    /// Cache or serialization failure for the critical-value table.
    #[error("critical-value cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
