//! Simulation study: data-generating processes and the replication harness
//! that reproduces the empirical size and median-delay tables.

pub mod dgp;
pub mod harness;

pub use dgp::{generate, DgpSpec, Scenario};
pub use harness::{
    run_table, run_table_with, ReplicationResult, SimulationTable, TableCell, TableEntry,
    TableParams,
};
