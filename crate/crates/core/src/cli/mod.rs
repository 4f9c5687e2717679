//! Batch front end: model configs, command dispatch and run manifests.

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{load_config, DeclaredConstants, ModelConfig, NoiseEntry};
pub use manifest::{RunManifest, Verdict};
pub use run::{parse_times, run, Command, DensityMode, RunOptions, SimMode};

use crate::error::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "LEVYFLOW_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`]; returns the count set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = text.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::config(
            THREADS_ENV,
            format!("expected a positive integer, got `{text}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))?;
    Ok(Some(n))
}
