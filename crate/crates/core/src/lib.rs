//! Online monitoring for changepoints in the factor structure of
//! matrix-valued time series.
//!
//! Observations X_t (p₁×p₂) are assumed to follow a matrix factor model
//! X_t = R F_t C′ + E_t. After projecting onto an oversized estimate of the
//! column space of C, the (k₁+1)-th eigenvalue of a rolling covariance of
//! the projected data stays near the noise floor while the factor structure
//! is stable and jumps to the spiked regime when it changes. A randomized
//! statistic built from that eigenvalue feeds four sequential detectors
//! (partial-sum, Darling–Erdős, Rényi, worst-case) with closed-form or
//! simulated critical values.
//!
//! The crate is organized as:
//! - [`series`]: the dense matrix time-series container;
//! - [`eigen`]: symmetric eigendecomposition and helpers;
//! - [`covariance`]: flattened covariances, the initial projection C̃, and
//!   rolling projected covariances;
//! - [`detector`]: the randomized monitoring statistic, critical values,
//!   and the sequential detectors;
//! - [`simulate`]: the data-generating processes and the replication
//!   harness behind the reported size/delay tables;
//! - [`rng`]: seedable streams and deterministic seed derivation.

pub mod covariance;
pub mod detector;
pub mod eigen;
pub mod error;
pub mod rng;
pub mod series;
pub mod simulate;

pub use covariance::{
    flattened_cov_rows, initial_projection, monitored_eigenvalues, project_series,
    rolling_projected_cov, MonitoredEigens, ProjectionState, RollingCov,
};
pub use detector::{
    monitor_series, monitor_with_restarts, replication_vote, CriticalValueTable, DetectorConfig,
    DetectorFamily, Direction, Monitor, Transform, VanishTransform, Verdict,
};
pub use eigen::{eigenvalue_ratio_k, eigh_sym, symmetric_sqrt, SymmetricSpectrum};
pub use error::{Error, Result};
pub use series::MatrixSeries;
pub use simulate::{generate, run_table, DgpSpec, Scenario, SimulationTable};
