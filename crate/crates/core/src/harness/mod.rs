//! Scenario files, the closed-loop simulator, continuity metrics and
//! report output.

mod output;
mod report;
mod scenario;
mod sim;
mod svg;

use std::path::PathBuf;

pub use output::{emit_outputs, write_csv, OutputOptions, OutputPaths};
pub use report::{compare_modes, continuity_metric, ContinuityReport, ModeComparison, JUMP_THRESHOLD};
pub use scenario::{
    load_scenario, ControlPoint, NamedBarrier, Scenario, ScenarioFile, SystemConfig, Workspace, SCHEMA,
};
pub use sim::{run, Event, Mode, RowDump, StepRecord, Termination, TrajectoryLog};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario parse error: {0}")]
    Parse(serde_json::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
}
