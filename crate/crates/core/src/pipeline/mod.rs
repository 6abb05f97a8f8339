//! End-to-end commands: scoring news, generating fixtures and running a
//! forecasting method over every ticker.
//!
//! Settings come from [`RunConfig`]. A config file is flat `key = value`
//! text using the same keys as [`RunConfig::set`]; blank lines and lines
//! starting with `#` are ignored.
//!
//! ```
//! use newsflow::pipeline::{Method, RunConfig};
//!
//! let mut config = RunConfig::default();
//! config.apply_text("window = 5\nmethod = dp-lstm\n# comment\n").unwrap();
//! config.set("lambda-noise", "0.3").unwrap();
//! assert_eq!((config.window, config.method, config.lambda_noise), (5, Method::DpLstm, 0.3));
//! ```

mod config;
mod run;
mod score;

use thiserror::Error;

pub use config::{Method, RunConfig, DEFAULT_BATCH_SIZE};
pub use run::{cmd_run, run_ticker, RunReport, TickerOutcome, TickerRun};
pub use score::{cmd_fixture, cmd_score, load_calendar, ScoreOptions, ScoreSummary};

/// A failed stage and its cause.
#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: impl Into<String>, cause: impl std::fmt::Display) -> Self {
        Self {
            stage: stage.into(),
            message: cause.to_string(),
        }
    }
}

/// Tags an error with the stage that produced it.
pub(crate) trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, PipelineError>;
}

impl<T, E: std::fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, name: &str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(name, e))
    }
}
