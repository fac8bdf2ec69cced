//! Canonical ambiguous-QA dataset: loading, validation and summary statistics.
//!
//! The on-disk form is JSON Lines, one sample per line:
//!
//! ```text
//! {"id":"s1","question":"...","disambiguations":[{"question":"...","answers":["..."]}],"references":["..."]}
//! ```
//!
//! Line order defines sample order.

use crate::scalar::{mean, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema error at line {line} ({record}): {message}")]
    Schema {
        line: usize,
        record: String,
        message: String,
    },

    #[error("validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),

    #[error("unknown split '{0}' (expected train, dev or test)")]
    UnknownSplit(String),
}

/// One interpretation of an ambiguous question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disambiguation {
    #[serde(rename = "question")]
    pub disambiguated_question: String,
    /// Gold short answer followed by accepted aliases.
    #[serde(rename = "answers")]
    pub accepted_answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaSample {
    pub id: String,
    pub question: String,
    pub disambiguations: Vec<Disambiguation>,
    /// Gold long answers.
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(DatasetError::UnknownSplit(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub split: Split,
    pub samples: Vec<QaSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&QaSample> {
        self.samples.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyDataset,
    DuplicateId,
    EmptyQuestion,
    NoDisambiguations,
    EmptyDisambiguatedQuestion,
    NoAcceptedAnswers,
    BlankAcceptedAnswer,
    NoReferences,
    /// dev/test samples are expected to carry two references
    ReferenceCountDev,
}

impl ViolationKind {
    pub fn severity(self) -> Severity {
        match self {
            ViolationKind::ReferenceCountDev => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::EmptyDataset => "empty-dataset",
            ViolationKind::DuplicateId => "duplicate-id",
            ViolationKind::EmptyQuestion => "empty-question",
            ViolationKind::NoDisambiguations => "no-disambiguations",
            ViolationKind::EmptyDisambiguatedQuestion => "empty-disambiguated-question",
            ViolationKind::NoAcceptedAnswers => "no-accepted-answers",
            ViolationKind::BlankAcceptedAnswer => "blank-accepted-answer",
            ViolationKind::NoReferences => "no-references",
            ViolationKind::ReferenceCountDev => "reference-count (dev)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// `None` for dataset-level violations.
    pub sample_id: Option<String>,
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    fn new(sample_id: Option<&str>, kind: ViolationKind, message: impl Into<String>) -> Self {
        Self {
            sample_id: sample_id.map(str::to_string),
            kind,
            message: message.into(),
        }
    }

    pub fn severity(&self) -> Severity {
        self.kind.severity()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sample_id {
            Some(id) => write!(f, "[{}] sample {}: {}", self.kind.label(), id, self.message),
            None => write!(f, "[{}] {}", self.kind.label(), self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity() == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity() == Severity::Warning)
    }

    /// True when no error-severity violation is present.
    pub fn is_loadable(&self) -> bool {
        self.errors().next().is_none()
    }
}

/// Check every type invariant. Violations are data; nothing here fails.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    if dataset.samples.is_empty() {
        violations.push(Violation::new(
            None,
            ViolationKind::EmptyDataset,
            "dataset holds zero samples",
        ));
    }

    let mut seen = HashSet::new();
    for sample in &dataset.samples {
        let id = Some(sample.id.as_str());
        if !seen.insert(sample.id.as_str()) {
            violations.push(Violation::new(id, ViolationKind::DuplicateId, "id is not unique"));
        }
        if sample.question.trim().is_empty() {
            violations.push(Violation::new(
                id,
                ViolationKind::EmptyQuestion,
                "ambiguous question is empty",
            ));
        }
        if sample.disambiguations.is_empty() {
            violations.push(Violation::new(
                id,
                ViolationKind::NoDisambiguations,
                "disambiguations list is empty",
            ));
        }
        for (i, d) in sample.disambiguations.iter().enumerate() {
            if d.disambiguated_question.trim().is_empty() {
                violations.push(Violation::new(
                    id,
                    ViolationKind::EmptyDisambiguatedQuestion,
                    format!("disambiguation {i} has an empty question"),
                ));
            }
            if d.accepted_answers.is_empty() {
                violations.push(Violation::new(
                    id,
                    ViolationKind::NoAcceptedAnswers,
                    format!("disambiguation {i} has no accepted answers"),
                ));
            }
            if d.accepted_answers.iter().any(|a| a.trim().is_empty()) {
                violations.push(Violation::new(
                    id,
                    ViolationKind::BlankAcceptedAnswer,
                    format!("disambiguation {i} has a blank accepted answer"),
                ));
            }
        }
        if sample.references.is_empty() {
            violations.push(Violation::new(
                id,
                ViolationKind::NoReferences,
                "references list is empty",
            ));
        } else if dataset.split != Split::Train && sample.references.len() != 2 {
            violations.push(Violation::new(
                id,
                ViolationKind::ReferenceCountDev,
                format!(
                    "{} split sample has {} references, expected 2",
                    dataset.split,
                    sample.references.len()
                ),
            ));
        }
    }
    ValidationReport { violations }
}

/// Load a canonical JSON Lines dataset. Blank lines are skipped.
///
/// Hard invariant violations are rejected; warnings (reference count on
/// dev/test) are logged and the dataset is returned.
pub fn load_dataset(path: impl AsRef<Path>, split: Split) -> Result<Dataset, DatasetError> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: QaSample = serde_json::from_str(&line).map_err(|e| DatasetError::Schema {
            line: i + 1,
            record: record_hint(&line),
            message: e.to_string(),
        })?;
        samples.push(sample);
    }
    let dataset = Dataset { split, samples };
    let report = validate(&dataset);
    if !report.is_loadable() {
        return Err(DatasetError::Invalid(report.errors().cloned().collect()));
    }
    for w in report.warnings() {
        log::warn!("{w}");
    }
    Ok(dataset)
}

fn record_hint(line: &str) -> String {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(|id| id.as_str()).map(|s| format!("id={s}")))
        .unwrap_or_else(|| "unparseable record".to_string())
}

/// Write samples in canonical form, one per line.
pub fn write_samples<W: Write>(mut out: W, samples: &[QaSample]) -> Result<(), DatasetError> {
    for s in samples {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<(), DatasetError> {
    let out = BufWriter::new(File::create(path.as_ref())?);
    write_samples(out, &dataset.samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats<T> {
    pub sample_count: usize,
    pub mean_disambiguations_per_sample: T,
    pub mean_reference_length_words: T,
}

pub fn stats<T: Scalar>(dataset: &Dataset) -> DatasetStats<T> {
    let disambiguations = dataset
        .samples
        .iter()
        .map(|s| T::from_usize_lossy(s.disambiguations.len()));
    let ref_lengths = dataset
        .samples
        .iter()
        .flat_map(|s| s.references.iter())
        .map(|r| T::from_usize_lossy(r.split_whitespace().count()));
    DatasetStats {
        sample_count: dataset.samples.len(),
        mean_disambiguations_per_sample: mean(disambiguations),
        mean_reference_length_words: mean(ref_lengths),
    }
}
