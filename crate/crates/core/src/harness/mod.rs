//! End-to-end experiment orchestration: config legality, the per-sample
//! pipeline, run-record persistence, report tables and dataset ingestion.

mod config;
mod ingest;
mod record;
mod report;
mod runner;

pub use config::{BackendSpec, ExperimentConfig, RepeatTarget, RetrieverSpec};
pub use ingest::{ingest_asqa, ingest_asqa_file};
pub use record::{recompute_metrics, FailureEntry, RunRecord, SampleRow, Timings, RECORD_FILE};
pub use report::{render_report, ReportFormat};
pub use runner::{
    build_retriever, load_canned_generator, repeat_target_words, run_experiment, run_experiment_with,
    stub_generator, stub_oracle, Backends,
};

use crate::dataset::DatasetError;
use crate::generation::GenerationError;
use crate::metrics::MetricError;
use crate::retrieval::RetrievalError;
use std::path::PathBuf;
use thiserror::Error;

/// Version string embedded in every run record.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Retrieval(#[from] RetrievalError),

    #[error(transparent)]
    Metric(#[from] MetricError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed run record: {0}")]
    Record(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("run incomplete: {failures} failure(s), partial record at {}", record_path.display())]
    PartialRun {
        record_path: PathBuf,
        failures: usize,
        first: String,
    },

    #[error("cannot ingest record '{key}': {message}")]
    Ingest { key: String, message: String },
}

impl HarnessError {
    /// Process exit code: 1 for validation and config problems, 2 for
    /// backend failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Backend(_) | HarnessError::PartialRun { .. } => 2,
            HarnessError::Metric(MetricError::Oracle { .. }) => 2,
            _ => 1,
        }
    }
}

impl From<GenerationError> for HarnessError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Backend(b) => HarnessError::Backend(b.to_string()),
            GenerationError::EmptyText(_) => HarnessError::Backend(e.to_string()),
            other => HarnessError::Config(other.to_string()),
        }
    }
}
