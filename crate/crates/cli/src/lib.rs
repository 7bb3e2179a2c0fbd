//! Command-line driver for the `critles` solvers.
//!
//! `run` executes one configured simulation, `sweep` repeats it over a list of filter
//! widths against an unfiltered reference, and `verify` runs built-in property suites.
//! Configs are strict JSON (see [`config`]); every run writes `budget.csv`,
//! `norms.csv`, spectral snapshots and a `manifest.json` that can be fed back to `run`.

pub mod commands;
pub mod config;
mod error;
pub mod manifest;
pub mod runner;
pub mod verify;

pub use commands::{cmd_run, cmd_sweep, Options};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::{Manifest, Status};
