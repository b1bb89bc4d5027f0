//! Seeded lifetime simulator for wireless sensor networks under topology
//! control.
//!
//! A run deploys nodes uniformly around a central sink, builds a reduced
//! topology (A3 or A3Cov), keeps it alive with one of six time- or
//! energy-triggered maintenance protocols, and samples alive nodes,
//! sink-reachable nodes, communication coverage and sensing coverage.

pub mod construction;
pub mod coverage;
pub mod deployment;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod maintenance;
pub mod model;
pub mod parallel;
pub mod radio;

pub use construction::{a3_construct, a3cov_construct, prune_childless, A3Params, Construction, ConstructionCharge, Constructor, TcProtocol};
pub use coverage::{
    alive_count, comm_coverage, sense_probability, sensing_coverage, sink_reachable, CoverageGrid, MetricsSample,
};
pub use deployment::{deploy, DeploymentConfig};
pub use engine::{initialize, run, MaintenanceState, RunResult, SimConfig, Simulation, TmChoice};
pub use error::{Result, SimError};
pub use maintenance::{
    maintain, precompute_rotation_set, should_trigger, MaintenanceAction, MaintenanceStrategy, StrategyKind,
    TmProtocol, TriggerFamily, TriggerPolicy,
};
pub use model::{
    distance, DeploymentArea, EnergyParams, Life, NetworkState, Node, NodeId, Point, RadioParams, Role,
    SensingParams, Topology, SINK,
};
pub use parallel::Execution;
