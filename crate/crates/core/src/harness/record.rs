//! Run records: append-only JSON Lines with the config snapshot embedded.
//!
//! ```text
//! {"kind":"config", ...}
//! {"kind":"row", ...}        one per sample, in dataset order
//! {"kind":"failure", ...}    zero or more
//! {"kind":"metrics", ...}    absent for partial runs
//! {"kind":"footer", ...}     timings and tool version
//! ```

use super::{ExperimentConfig, HarnessError};
use crate::dataset::Dataset;
use crate::generation::{DecodingConfig, Scenario};
use crate::metrics::{evaluate, Evaluation, Predictions, QaOracle};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const RECORD_FILE: &str = "record.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: String,
    pub scenario: Scenario,
    pub retriever_tag: String,
    pub k: usize,
    pub decoding: Option<DecodingConfig>,
    pub prompt_words: usize,
    pub answer: String,
    pub retrieved: Vec<String>,
    /// retrieval returned nothing for a retrieval-only answer
    #[serde(default)]
    pub miss: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub sample_id: Option<String>,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub answer_ms: u64,
    pub metrics_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<SampleRow>,
    pub failures: Vec<FailureEntry>,
    pub evaluation: Option<Evaluation<T>>,
    pub timings: Timings,
    pub tool_version: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line<T> {
    Config {
        config_hash: String,
        config: ExperimentConfig,
    },
    Row(SampleRow),
    Failure(FailureEntry),
    Metrics(Evaluation<T>),
    Footer {
        timings: Timings,
        tool_version: String,
    },
}

impl<T: Scalar> RunRecord<T> {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.evaluation.is_some()
    }

    pub fn predictions(&self) -> Predictions {
        self.rows
            .iter()
            .map(|r| (r.sample_id.clone(), r.answer.clone()))
            .collect()
    }

    /// Canonical serialization of the per-sample rows, one JSON object per line.
    pub fn rows_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.rows {
            serde_json::to_writer(&mut out, r).expect("row serializes");
            out.push(b'\n');
        }
        out
    }

    pub fn path_in(dir: &Path) -> PathBuf {
        dir.join(RECORD_FILE)
    }

    /// Write the record line by line through a single writer.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("jsonl.partial");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            let mut line = |l: &Line<T>| -> Result<(), HarnessError> {
                serde_json::to_writer(&mut out, l).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
                Ok(())
            };
            line(&Line::Config {
                config_hash: self.config_hash.clone(),
                config: self.config.clone(),
            })?;
            for r in &self.rows {
                line(&Line::Row(r.clone()))?;
            }
            for f in &self.failures {
                line(&Line::Failure(f.clone()))?;
            }
            if let Some(ev) = &self.evaluation {
                line(&Line::Metrics(ev.clone()))?;
            }
            line(&Line::Footer {
                timings: self.timings,
                tool_version: self.tool_version.clone(),
            })?;
            out.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let path = if path.is_dir() {
            Self::path_in(path)
        } else {
            path.to_path_buf()
        };
        let reader = BufReader::new(File::open(&path)?);
        let mut config = None;
        let mut record = RunRecord {
            config: ExperimentConfig::new("", crate::dataset::Split::Dev, Scenario::ClosedBook, ""),
            config_hash: String::new(),
            rows: Vec::new(),
            failures: Vec::new(),
            evaluation: None,
            timings: Timings::default(),
            tool_version: String::new(),
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line<T> = serde_json::from_str(&line)
                .map_err(|e| HarnessError::Record(format!("{}: line {}: {e}", path.display(), i + 1)))?;
            match parsed {
                Line::Config {
                    config_hash,
                    config: c,
                } => {
                    record.config_hash = config_hash;
                    config = Some(c);
                }
                Line::Row(r) => record.rows.push(r),
                Line::Failure(f) => record.failures.push(f),
                Line::Metrics(ev) => record.evaluation = Some(ev),
                Line::Footer {
                    timings,
                    tool_version,
                } => {
                    record.timings = timings;
                    record.tool_version = tool_version;
                }
            }
        }
        record.config =
            config.ok_or_else(|| HarnessError::Record(format!("{}: missing config line", path.display())))?;
        Ok(record)
    }
}

/// Recompute the metrics of a stored record from its rows.
pub fn recompute_metrics<T: Scalar>(
    record: &RunRecord<T>,
    dataset: &Dataset,
    oracle: &dyn QaOracle,
) -> Result<Evaluation<T>, HarnessError> {
    Ok(evaluate(&record.predictions(), dataset, oracle)?)
}
