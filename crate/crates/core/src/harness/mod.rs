//! Scenario files, the simulate-analyse-classify pipeline, CSV/JSON output,
//! parameter sweeps and the two-route consistency check.

pub mod bundled;
pub mod config;
mod run;
mod sweep;
mod verify;

use thiserror::Error;

pub use config::{ScenarioConfig, SweepConfig, SystemConfig, COLUMNS};
pub use run::{fault_breaks, reanalyze, run_scenario, simulate_and_analyze, write_series, ScenarioRun, Summary};
pub use sweep::{run_sweep, write_sweep_table, SweepRow};
pub use verify::{verify_identity, VerifyReport, ABS_FLOOR};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}", if path.is_empty() { message.clone() } else { format!("{path}: {message}") })]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Param(#[from] crate::error::ParamError),
}

impl HarnessError {
    /// Process exit code: 2 for anything wrong with the input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Param(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        Self::Io {
            context: context.to_string(),
            source,
        }
    }
}
