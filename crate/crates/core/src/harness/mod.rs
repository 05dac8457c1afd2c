//! Closed-loop episode driver, trajectory logs, batch evaluation and plots.

mod config;
mod episode;
mod plot;
mod record;
mod suite;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{AvoidConfig, ConfigFile, EpisodeConfig, Interleave, Jitter, PlannerKind};
pub use episode::{
    initial_state, make_planner, realize, run_episode, run_episode_from, Executor, Realized,
};
pub use plot::{plot_record, simplify_polyline, PlotFiles};
pub use record::{
    read_record, replay, schedule_digest, write_record, EndRow, PlanRow, RecordHeader, RecordRow,
    TickRow, TrajectoryRecord, RECORD_SCHEMA_VERSION,
};
pub use suite::{discover_scenarios, run_suite, CategoryStats, EpisodeSummary, SuiteReport};

use crate::planner::FailureReason;
use crate::simworld::SceneError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record error: {0}")]
    Record(String),
    #[error("record schema version {found} is not supported (expected {expected})")]
    RecordSchema { found: u32, expected: u32 },
    #[error("record truncated after row {last_valid_row}: {reason}")]
    Truncated {
        last_valid_row: usize,
        reason: String,
    },
    #[error("replay config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("replay diverged at tick {tick}: {detail}")]
    Diverged { tick: u64, detail: String },
    #[error("planning pipeline error: {0}")]
    Pipeline(String),
    #[error("episode {scenario} rep {rep} panicked: {message} (log: {})", record.display())]
    EpisodePanic {
        scenario: String,
        rep: u32,
        message: String,
        record: PathBuf,
    },
}

/// Why an episode stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Success,
    Collision { entity: String },
    Timeout,
    PlannerFailure { reason: FailureReason },
    ReplanLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub success: bool,
    /// Seconds from the first motion command to the terminal tick. Zero if
    /// the UAV never moved.
    pub completion_time: f64,
    pub path_length: f64,
    /// Planner calls issued.
    pub replans: u32,
    pub ticks: u64,
    pub termination: Termination,
}
