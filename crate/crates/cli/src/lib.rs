//! Config-driven experiment runner for `modspace-core`.
//!
//! One JSON file describes one experiment. [`run`] validates it, runs it, and
//! writes a CSV table, `summary.json`, `timings.json` and `.dat` curves to
//! `<output dir>/<name>/`.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::{run_experiment, ResultRecord, RunError};

/// Run a validated config and write its outputs. Returns the record and the
/// run directory.
pub fn run(config: &ExperimentConfig) -> Result<(ResultRecord, PathBuf), RunError> {
    let record = run_experiment(config)?;
    let dir = output::output_root(config.output.dir.as_deref()).join(&config.name);
    output::write_all(&record, &dir)?;
    Ok((record, dir))
}

/// Load, override, run and write; the process exit code comes back with the
/// outcome.
pub fn run_file(path: &Path, overrides: &[String]) -> Result<(ResultRecord, PathBuf), RunError> {
    let config = config::load(path, overrides)?;
    run(&config)
}
