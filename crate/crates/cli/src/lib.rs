//! Config-driven experiments on conceptor-controlled reservoirs.
//!
//! [`run`] trains, generates and evaluates one experiment and writes its CSV
//! artifacts together with a manifest. Built-in configurations live in
//! [`presets`].

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;

use std::path::PathBuf;

pub use config::{EmitKind, ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use experiment::{execute, RunOutcome};

/// Executes `cfg` and writes its artifacts to `cfg.output_dir`. Either all
/// files are written or none.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunOutcome, Vec<PathBuf>), CliError> {
    let outcome = execute(cfg)?;
    let artifacts = artifacts::build(&outcome);
    let written = artifacts::write_all(&cfg.output_dir, &outcome, &artifacts)?;
    Ok((outcome, written))
}
