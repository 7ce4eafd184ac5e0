//! Scenario runner for multiplexed Lie-bracket control of Dubins cars.

pub mod builtins;
pub mod error;
pub mod export;
pub mod scenario;
pub mod verify;

pub use error::{CliError, Result};
pub use export::{export_csv, read_csv, write_run};
pub use scenario::{run_batch, run_scenario, RunOutput, Scenario, Summary};
pub use verify::{verify_convergence, ConvergenceTable};
