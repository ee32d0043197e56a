//! Scenario runner: parses scenario files, runs the flow with its monitors
//! and writes trajectories, summaries and plots.

pub mod runner;
pub mod scenario;
pub mod svg;

pub use runner::{load_scenario, refine_study, run_batch, run_scenario, simulate, RunError, Summary};
pub use scenario::{Scenario, ScenarioError};
