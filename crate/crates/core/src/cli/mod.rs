//! Batch pipeline behind the `analyze`, `synth` and `figures` subcommands.

pub mod config;
pub mod figures;
pub mod manifest;
pub mod pipeline;

use std::fmt;

pub use config::PipelineConfig;
pub use figures::{emit_figure_data, load_results, Figure, RunResults};
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, RunOutcome};

/// Environment variable that bounds the worker pool.
pub const WORKERS_ENV: &str = "CLUSTER_ENTROPY_WORKERS";

/// Failure of a whole run, mapped onto the process exit code.
#[derive(Debug)]
pub enum PipelineError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Input(String),
    /// Exit 4: some asset has no usable cluster distribution anywhere.
    InsufficientClusters(String),
    /// Exit 1: failure while writing results.
    Output(crate::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Input(_) => 3,
            PipelineError::InsufficientClusters(_) => 4,
            PipelineError::Output(_) => 1,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Config(m) => write!(f, "invalid configuration: {m}"),
            PipelineError::Input(m) => write!(f, "input error: {m}"),
            PipelineError::InsufficientClusters(m) => write!(f, "insufficient clusters: {m}"),
            PipelineError::Output(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<crate::Error> for PipelineError {
    fn from(e: crate::Error) -> Self {
        PipelineError::Output(e)
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Output(e.into())
    }
}
