//! Job runner for etlab: reads a JSON config, sieves (or loads the cached
//! table), runs each job in order, and writes one CSV per job plus a
//! `manifest.json` with checksums.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod runner;

pub use config::{JobConfig, JobSpec, Restriction};
pub use error::{exit, CliError};
pub use runner::{load_or_sieve, run, run_with, JobRecord, JobStatus, RunManifest, RunOptions, MANIFEST_FILE};
