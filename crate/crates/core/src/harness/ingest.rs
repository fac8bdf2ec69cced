//! Conversion from the published ASQA JSON layout to the canonical dataset.
//!
//! The source is one JSON object keyed by split name, each split an object
//! keyed by sample id:
//!
//! ```text
//! {"dev": {"<id>": {"ambiguous_question": "...",
//!                   "qa_pairs": [{"question": "...", "short_answers": ["..."]}],
//!                   "annotations": [{"long_answer": "..."}]}}}
//! ```
//!
//! A bare split object (no split keys at the top) is accepted as well.

use super::HarnessError;
use crate::dataset::{save_dataset, validate, Dataset, Disambiguation, QaSample, Split};
use serde::Deserialize;
use serde_json::{Map, Value};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

#[derive(Deserialize)]
struct SourceRecord {
    ambiguous_question: String,
    #[serde(default)]
    qa_pairs: Vec<SourcePair>,
    #[serde(default)]
    annotations: Vec<SourceAnnotation>,
}

#[derive(Deserialize)]
struct SourcePair {
    question: String,
    #[serde(default)]
    short_answers: Vec<String>,
}

#[derive(Deserialize)]
struct SourceAnnotation {
    #[serde(default)]
    long_answer: String,
}

fn split_object(root: Value, split: Split) -> Result<Map<String, Value>, HarnessError> {
    let Value::Object(mut root) = root else {
        return Err(HarnessError::Ingest {
            key: "<root>".into(),
            message: "expected a JSON object".into(),
        });
    };
    let names: &[&str] = match split {
        Split::Dev => &["dev", "validation"],
        Split::Train => &["train"],
        Split::Test => &["test"],
    };
    let has_split_keys = ["train", "dev", "validation", "test"]
        .iter()
        .any(|k| root.contains_key(*k));
    if !has_split_keys {
        return Ok(root);
    }
    for name in names {
        if let Some(v) = root.remove(*name) {
            return match v {
                Value::Object(m) => Ok(m),
                _ => Err(HarnessError::Ingest {
                    key: name.to_string(),
                    message: "split is not an object".into(),
                }),
            };
        }
    }
    Err(HarnessError::Ingest {
        key: split.to_string(),
        message: "split not present in source".into(),
    })
}

fn convert(key: &str, value: Value) -> Result<QaSample, HarnessError> {
    let err = |message: String| HarnessError::Ingest {
        key: key.to_string(),
        message,
    };
    let rec: SourceRecord = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
    let references: Vec<String> = rec
        .annotations
        .into_iter()
        .map(|a| a.long_answer.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    if references.is_empty() {
        return Err(err("no long answers".into()));
    }
    if rec.qa_pairs.is_empty() {
        return Err(err("no disambiguations".into()));
    }
    let mut disambiguations = Vec::with_capacity(rec.qa_pairs.len());
    for (i, pair) in rec.qa_pairs.into_iter().enumerate() {
        let mut aliases: Vec<String> = Vec::new();
        for a in pair.short_answers {
            let a = a.trim().to_string();
            if !a.is_empty() && !aliases.contains(&a) {
                aliases.push(a);
            }
        }
        if aliases.is_empty() {
            return Err(err(format!("disambiguation {i} has no short answers")));
        }
        disambiguations.push(Disambiguation {
            disambiguated_question: pair.question.trim().to_string(),
            accepted_answers: aliases,
        });
    }
    Ok(QaSample {
        id: key.to_string(),
        question: rec.ambiguous_question.trim().to_string(),
        disambiguations,
        references,
    })
}

/// Convert one split of the published layout. The result passes
/// validation with no errors; unmappable records fail naming their key.
pub fn ingest_asqa(source: impl AsRef<Path>, split: Split) -> Result<Dataset, HarnessError> {
    let root: Value = serde_json::from_reader(BufReader::new(File::open(source.as_ref())?)).map_err(|e| {
        HarnessError::Ingest {
            key: source.as_ref().display().to_string(),
            message: e.to_string(),
        }
    })?;
    let samples = split_object(root, split)?
        .into_iter()
        .map(|(k, v)| convert(&k, v))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = Dataset { split, samples };
    let report = validate(&dataset);
    if let Some(v) = report.errors().next() {
        return Err(HarnessError::Ingest {
            key: v.sample_id.clone().unwrap_or_else(|| "<dataset>".into()),
            message: v.message.clone(),
        });
    }
    for w in report.warnings() {
        log::warn!("{w}");
    }
    Ok(dataset)
}

/// Convert and write the canonical JSON Lines file.
pub fn ingest_asqa_file(
    source: impl AsRef<Path>,
    split: Split,
    dest: impl AsRef<Path>,
) -> Result<Dataset, HarnessError> {
    let dataset = ingest_asqa(source, split)?;
    save_dataset(dest, &dataset)?;
    Ok(dataset)
}
