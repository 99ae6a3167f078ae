//! Seeded experiment runner: trials of perceive, select and fling steps,
//! matrix updates, metric tables and the demo-log ingestion used by the CLI.

mod config;
mod episode;
mod experiment;

pub use config::{AblationMode, ExperimentConfig, PathsConfig};
pub use episode::{
    assemble_candidates, run_episode_step, Action, DecisionRef, Env, Matrices, ObservationSummary, StepLog, StepResult,
};
pub use experiment::{
    ingest_demo_log, load_garment, load_matrices, report, run_experiment, write_outputs, ExperimentOutcome,
    LoadedMatrices, Report,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl HarnessError {
    /// 2 for bad configuration, 3 for bad or unreadable data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
