//! Experiment runner for attribution stability scores: data loading,
//! configuration, the end-to-end pipeline and its report writers.

pub mod config;
pub mod confound;
pub mod data;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod run;
pub mod schemes;
pub mod sweep;
pub mod table_stats;
pub mod verify;

pub use config::{Condition, CsvSource, DatasetSource, RunConfig, SyntheticSpec};
pub use error::{HarnessError, Result};
pub use run::{run_pipeline, write_run, RunOutput};
