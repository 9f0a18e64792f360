//! Experiment harness for the `qsdc_core` simulator: seeded campaigns of
//! protocol runs, channel-noise calibration and sweeps, impersonation
//! detection curves and standalone CHSH triage, all emitted as CSV or JSON
//! tables.

pub mod campaign;
pub mod experiments;
pub mod seeds;
pub mod table;

use std::io;

use qsdc_core::protocol::ProtocolError;
use thiserror::Error;

pub use campaign::{run_trials, CampaignSummary, RunConfig, TrialRecord};
pub use experiments::{
    calibrate_noise, chsh_report, detection_curve, histogram_message, sweep_eta, Calibration, ChshReport,
    DetectionRow, SweepResult, SweepRow,
};
pub use seeds::trial_seed;
pub use table::{Format, Provenance, Table};

#[derive(Debug, Error)]
pub enum XlabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Protocol(#[from] ProtocolError),
    #[error("CHSH estimation failed: {0}")]
    Estimation(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl XlabError {
    /// Process exit code: 1 for configuration problems, 2 for everything
    /// that goes wrong at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            XlabError::Config(_) => 1,
            XlabError::Protocol(e) if e.is_config_error() => 1,
            _ => 2,
        }
    }
}

/// Runs `f` on a pool of `workers` threads (0 means one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, XlabError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}
