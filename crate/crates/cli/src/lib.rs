//! Command-line experiments for the `wdrcm` crate.

pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod plot;

pub use config::{build, read_document, ExperimentConfig, ExperimentKind};
pub use error::{CliError, CliResult};
pub use experiment::{run, RunOutcome};
pub use manifest::RunManifest;
