//! Config parsing and the scenario runner behind `grushin-lab`.

pub mod config;
pub mod run;

pub use config::{parse_config, RunConfig, Scenario, SpecLabel};
pub use run::{run, Failure, RunOutcome};
