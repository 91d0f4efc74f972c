//! Command-line companion to `sburgers-core`: configuration files, CSV and
//! JSON exports, verification scenarios, and the steering and replication
//! applications.
//!
//! The library half hosts everything the binary does so that integration
//! tests can drive scenarios in-process; the binary itself only parses
//! arguments and maps report verdicts onto process exit codes:
//!
//! * `0` — the scenario ran and every check passed,
//! * `2` — the scenario ran and at least one check failed its tolerance,
//! * `3` — the configuration was rejected before any output was written,
//! * `1` — an I/O or numerical failure interrupted the run.

pub mod apps;
pub mod config;
pub mod error;
pub mod export;
pub mod report;
pub mod scenarios;

pub use config::ScenarioConfig;
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_FAILURE, EXIT_TOLERANCE};
pub use report::Report;
pub use scenarios::Scenario;
