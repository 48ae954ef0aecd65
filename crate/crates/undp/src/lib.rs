//! File formats, configuration and batch runs on top of `undp-core`.

pub mod config;
pub mod instance;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Mode, RunConfig};
pub use instance::{Instance, InstanceError};
pub use report::RunReport;
pub use run::{execute, run_chains, sweep, ChainsOutcome, LevelResult, RunError, Session};
