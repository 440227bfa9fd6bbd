//! Command-line driver: config parsing, trace files, stage-tagged errors and
//! the end-to-end pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, CliResult, Stage};
pub use pipeline::{run_pipeline, Manifest, PipelineOutcome};
