//! Configuration, experiment orchestration and file output.

pub mod cli;
pub mod config;
mod run;
pub mod svg;

use std::fmt;

pub use config::{ExperimentConfig, ExperimentKind, PointSpec};
pub use run::{
    execute, family_reference, find_config_witness, parse_point, prepare_grids, run_experiment, run_scale_scan, scan_family_point,
    write_artifacts, Artifacts, ContractionRun, ErrorCurveRun, HellingerRun, PreparedGrids, RunSummary,
    ScaleScanResult, CONTRACTION_COLUMNS, ERROR_CURVE_COLUMNS, HELLINGER_COLUMNS, SCAN_COLUMNS,
};

/// Failure of a harness operation, split by the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// Unreadable or invalid configuration (exit code 2).
    Config(String),
    /// Failure while running or writing results (exit code 3).
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "configuration error: {m}"),
            HarnessError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

/// Applies `SINGULAB_THREADS` to the global worker pool. Returns the thread
/// count in effect.
pub fn init_thread_pool() -> usize {
    if let Some(n) = std::env::var("SINGULAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // fails only if the pool was already built, which leaves it as is
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}
