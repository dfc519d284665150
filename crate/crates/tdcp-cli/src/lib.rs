//! Library half of the scenario runner: configuration files, experiment
//! orchestration, CSV emission and report tooling. The `tdcpsim` binary is
//! a thin argument-parsing layer over this.

pub mod csvout;
pub mod error;
pub mod report_tool;
pub mod runner;
pub mod scenario;

pub use error::CliError;
pub use runner::UseCase;
pub use scenario::{ChannelModel, Scenario};
