//! Sequential monitoring of the projected spectrum.
//!
//! The pieces assemble in pipeline order: [`config`] describes what to
//! monitor, [`tuning`] resolves the rate parameter δ and checks the
//! asymptotic conditions, [`psi`] maps monitored eigenvalues to the
//! stabilization term ψ_τ, [`critical`] supplies detector boundaries, and
//! [`stats`]/[`monitor`] run the four detector statistics over a stream.

pub mod config;
pub mod critical;
pub mod monitor;
pub mod psi;
pub mod stats;
pub mod tuning;

pub use config::{DetectorConfig, DetectorFamily, Direction, Transform, VanishTransform};
pub use critical::{
    calibrate_sup_functional, calibrate_sup_functional_batch, darling_erdos_critical,
    sup_abs_brownian_cdf, sup_abs_brownian_quantile, worst_case_critical, worst_case_normings,
    CacheEntry, CriticalValueTable, FunctionalTag, Provenance,
};
pub use monitor::{
    monitor_series, monitor_with_restarts, replication_vote, Monitor, MonitorState, Verdict,
    VoteOutcome,
};
pub use psi::{g_tilde_transform, g_transform, psi_value, PSI_CAP};
pub use stats::{
    stat_darling_erdos, stat_partial_sum, stat_renyi, stat_worst_case, StatOutcome,
    StreamingDetector,
};
pub use tuning::{
    check_restriction, l_sequence, power_condition_report, select_delta, ConditionValue,
    PowerConditionReport, RestrictionReport, EPSILON_RATE,
};
