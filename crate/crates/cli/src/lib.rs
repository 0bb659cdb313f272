//! Experiment configuration, runners and CSV/JSON output for the
//! `fairalloc` benchmark CLI.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, Mode, RandomizedSpec};
pub use error::{CliError, Result};
pub use output::{ResultRow, SummaryRow, CSV_HEADER};
