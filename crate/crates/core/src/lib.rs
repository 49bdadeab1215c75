//! Slotted downlink scheduling for users that care about freshness (age of
//! information), latency, or throughput.
//!
//! * [`model`] describes users and scenarios and checks feasibility.
//! * [`solver`] computes AoI spacing targets, queueing latencies and the cost
//!   lower bound.
//! * [`policies`] holds the schedulers, [`sim`] drives them slot by slot and
//!   [`metrics`] turns the trace into per-user statistics.
//! * [`output`] and [`presets`] back the command-line tool.

pub mod metrics;
pub mod model;
pub mod output;
pub mod policies;
pub mod presets;
pub mod scenario_file;
pub mod sim;
pub mod solver;

pub use metrics::{RunReport, UeSummary};
pub use model::{ProblemVariant, Scenario, UeClass, UeConfig, UeId};
pub use sim::{run, Policy, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    ScenarioFile(#[from] scenario_file::ScenarioFileError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Policy(#[from] policies::PolicyError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
