//! Retrieval upper bound: how many disambiguations have a gold answer
//! somewhere in the retrieved evidence.

use super::{RetrievalError, Retriever};
use crate::dataset::Dataset;
use crate::metrics::matched_disambiguations;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub sample_id: String,
    pub hits: usize,
    pub disambiguations: usize,
}

/// Mean count and percentage over a set of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditColumn<T> {
    pub samples: usize,
    pub mean_hits: T,
    /// hits / disambiguations over the same samples, × 100
    pub percentage: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport<T> {
    pub label: String,
    pub k: usize,
    /// every sample
    pub overall: AuditColumn<T>,
    /// samples with at least one hit
    pub with_hit: AuditColumn<T>,
    pub rows: Vec<AuditRow>,
}

fn column<T: Scalar>(rows: &[&AuditRow]) -> AuditColumn<T> {
    let hits: usize = rows.iter().map(|r| r.hits).sum();
    let total: usize = rows.iter().map(|r| r.disambiguations).sum();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(num) / T::from_usize_lossy(den)
        }
    };
    AuditColumn {
        samples: rows.len(),
        mean_hits: ratio(hits, rows.len()),
        percentage: ratio(hits, total) * T::hundred(),
    }
}

impl<T: Scalar> UpperBoundReport<T> {
    pub fn from_rows(label: impl Into<String>, k: usize, rows: Vec<AuditRow>) -> Self {
        let all: Vec<&AuditRow> = rows.iter().collect();
        let hit: Vec<&AuditRow> = rows.iter().filter(|r| r.hits > 0).collect();
        Self {
            label: label.into(),
            k,
            overall: column(&all),
            with_hit: column(&hit),
            rows,
        }
    }
}

/// Count, per sample, the disambiguations with any accepted answer occurring
/// verbatim (case-folded, whitespace collapsed) in the concatenated bodies of
/// the top-`k` passages retrieved for the ambiguous question.
pub fn upper_bound_audit<T: Scalar>(
    dataset: &Dataset,
    retriever: &dyn Retriever<T>,
    k: usize,
) -> Result<UpperBoundReport<T>, RetrievalError> {
    let rows: Vec<AuditRow> = dataset
        .samples
        .par_iter()
        .map(|sample| {
            let result = retriever.retrieve(&sample.question, k)?;
            let evidence: Vec<&str> = result
                .ranked
                .iter()
                .filter_map(|s| retriever.index().passage(&s.pid))
                .map(|p| p.body.as_str())
                .collect();
            Ok(AuditRow {
                sample_id: sample.id.clone(),
                hits: matched_disambiguations(&evidence.join(" "), sample),
                disambiguations: sample.disambiguations.len(),
            })
        })
        .collect::<Result<_, RetrievalError>>()?;
    Ok(UpperBoundReport::from_rows(
        format!("{}@{k}", retriever.tag().to_uppercase()),
        k,
        rows,
    ))
}

/// Markdown table with the two audit columns, one row per report.
pub fn render_upper_bound_table<T: Scalar>(reports: &[UpperBoundReport<T>]) -> String {
    let mut out = String::new();
    out.push_str(
        "| | Avg # of short answers retrieved: in all results | In results with ≥1 correct answer |\n",
    );
    out.push_str("|---|---|---|\n");
    for r in reports {
        let _ = writeln!(
            out,
            "| {} | {:.2} ({:.2}%) | {:.2} ({:.2}%) |",
            r.label, r.overall.mean_hits, r.overall.percentage, r.with_hit.mean_hits, r.with_hit.percentage
        );
    }
    out
}
