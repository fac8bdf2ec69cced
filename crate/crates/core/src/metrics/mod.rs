//! Automated long-form answer metrics: Rouge-L, Str-EM, Disambig-F1, DR and
//! answer length.
//!
//! Per-sample scores are kept in `[0, 1]`; corpus scores are scaled to
//! `[0, 100]`. Rounding to one decimal happens only when rendering.

mod f1;
mod normalize;
mod oracle;
mod rouge;
mod str_em;

pub use f1::{best_alias_f1, token_f1};
pub use normalize::{contains_folded, fold_for_match, normalize, NormalizedTokens};
pub use oracle::{
    oracle_request_id, CachedOracle, CannedOracle, NullStub, OracleError, OracleRequest, OracleResponse,
    PerfectStub, QaOracle, RetryingOracle,
};
pub use rouge::{lcs_f1, lcs_length, rouge_l};
pub use str_em::{matched_disambiguations, str_em};

use crate::dataset::{Dataset, QaSample};
use crate::scalar::{round1, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// sample id → predicted long answer
pub type Predictions = HashMap<String, String>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("at least one reference is required")]
    NoReferences,

    #[error("DR inputs must be non-negative (got rouge_l={rouge_l}, disambig_f1={disambig_f1})")]
    NegativeInput { rouge_l: f64, disambig_f1: f64 },

    #[error("missing predictions for {} sample(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("oracle failed on sample {sample_id}: {source}")]
    Oracle { sample_id: String, source: OracleError },
}

/// Geometric mean of Rouge-L and Disambig-F1.
pub fn dr<T: Scalar>(rouge_l: T, disambig_f1: T) -> Result<T, MetricError> {
    if !(rouge_l >= T::zero() && disambig_f1 >= T::zero()) {
        return Err(MetricError::NegativeInput {
            rouge_l: rouge_l.to_f64().unwrap_or(f64::NAN),
            disambig_f1: disambig_f1.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((rouge_l * disambig_f1).sqrt())
}

/// Mean whitespace word count of raw predictions.
pub fn answer_length<T: Scalar, S: AsRef<str>>(predictions: impl IntoIterator<Item = S>) -> T {
    crate::scalar::mean(
        predictions
            .into_iter()
            .map(|p| T::from_usize_lossy(p.as_ref().split_whitespace().count())),
    )
}

/// Per-sample Disambig-F1 term: mean over disambiguations of the best alias
/// F1 against the oracle's reading of the prediction. In `[0, 1]`.
pub fn sample_disambig_f1<T: Scalar>(
    prediction: &str,
    sample: &QaSample,
    oracle: &dyn QaOracle,
) -> Result<T, MetricError> {
    if sample.disambiguations.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for d in &sample.disambiguations {
        let predicted = oracle
            .answer(prediction, &d.disambiguated_question)
            .map_err(|source| MetricError::Oracle {
                sample_id: sample.id.clone(),
                source,
            })?;
        total += best_alias_f1::<T, _>(&predicted, &d.accepted_answers);
    }
    Ok(total / T::from_usize_lossy(sample.disambiguations.len()))
}

fn ordered_predictions<'a>(
    predictions: &'a Predictions,
    dataset: &Dataset,
) -> Result<Vec<&'a str>, MetricError> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(dataset.len());
    for s in &dataset.samples {
        match predictions.get(&s.id) {
            Some(p) => out.push(p.as_str()),
            None => missing.push(s.id.clone()),
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(MetricError::MissingPredictions(missing))
    }
}

/// Corpus Disambig-F1 in `[0, 100]`.
///
/// Wrap remote oracles in [`CachedOracle`] so re-evaluation is cheap.
pub fn disambig_f1<T: Scalar>(
    predictions: &Predictions,
    dataset: &Dataset,
    oracle: &dyn QaOracle,
) -> Result<T, MetricError> {
    let preds = ordered_predictions(predictions, dataset)?;
    let per_sample: Vec<T> = dataset
        .samples
        .par_iter()
        .zip(preds.par_iter())
        .map(|(s, p)| sample_disambig_f1::<T>(p, s, oracle))
        .collect::<Result<_, _>>()?;
    Ok(corpus_score(&per_sample))
}

/// 100 × mean, summed in sample order so results are bit-reproducible.
fn corpus_score<T: Scalar>(per_sample: &[T]) -> T {
    crate::scalar::mean(per_sample.iter().copied()) * T::hundred()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    pub answer_length: T,
    pub rouge_l: T,
    pub str_em: T,
    pub disambig_f1: T,
    pub dr: T,
}

impl<T: Scalar> MetricReport<T> {
    /// Build a report, deriving DR from the other two headline scores.
    pub fn new(answer_length: T, rouge_l: T, str_em: T, disambig_f1: T) -> Result<Self, MetricError> {
        Ok(Self {
            answer_length,
            rouge_l,
            str_em,
            disambig_f1,
            dr: dr(rouge_l, disambig_f1)?,
        })
    }

    /// Check range and DR-consistency invariants.
    pub fn is_consistent(&self, tol: T) -> bool {
        let in_range = |x: T| x >= T::zero() && x <= T::hundred();
        in_range(self.rouge_l)
            && in_range(self.str_em)
            && in_range(self.disambig_f1)
            && in_range(self.dr)
            && self.answer_length >= T::zero()
            && dr(self.rouge_l, self.disambig_f1)
                .map(|d| (d - self.dr).abs() <= tol)
                .unwrap_or(false)
    }

    /// One-decimal copy for display.
    pub fn rounded(&self) -> Self {
        Self {
            answer_length: round1(self.answer_length),
            rouge_l: round1(self.rouge_l),
            str_em: round1(self.str_em),
            disambig_f1: round1(self.disambig_f1),
            dr: round1(self.dr),
        }
    }
}

/// Per-sample breakdown row. Scores in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics<T> {
    pub sample_id: String,
    pub answer_words: usize,
    pub rouge_l: T,
    pub str_em: T,
    pub disambig_f1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub report: MetricReport<T>,
    pub per_sample: Vec<SampleMetrics<T>>,
}

/// Score every sample and aggregate. Samples are evaluated in parallel and
/// aggregated in dataset order.
pub fn evaluate<T: Scalar>(
    predictions: &Predictions,
    dataset: &Dataset,
    oracle: &dyn QaOracle,
) -> Result<Evaluation<T>, MetricError> {
    let preds = ordered_predictions(predictions, dataset)?;
    let scored: Vec<(T, T, T)> = dataset
        .samples
        .par_iter()
        .zip(preds.par_iter())
        .map(|(s, p)| {
            Ok((
                rouge_l::<T, _>(p, &s.references)? / T::hundred(),
                str_em::<T>(p, s),
                sample_disambig_f1::<T>(p, s, oracle)?,
            ))
        })
        .collect::<Result<_, MetricError>>()?;

    let rouge: Vec<T> = scored.iter().map(|x| x.0).collect();
    let em: Vec<T> = scored.iter().map(|x| x.1).collect();
    let f1: Vec<T> = scored.iter().map(|x| x.2).collect();
    let report = MetricReport::new(
        answer_length(preds.iter()),
        corpus_score(&rouge),
        corpus_score(&em),
        corpus_score(&f1),
    )?;
    let per_sample = dataset
        .samples
        .iter()
        .zip(&preds)
        .zip(&scored)
        .map(|((s, p), &(r, e, f))| SampleMetrics {
            sample_id: s.id.clone(),
            answer_words: p.split_whitespace().count(),
            rouge_l: r * T::hundred(),
            str_em: e * T::hundred(),
            disambig_f1: f * T::hundred(),
        })
        .collect();
    Ok(Evaluation { report, per_sample })
}

/// Corpus Str-EM in `[0, 100]`.
pub fn corpus_str_em<T: Scalar>(predictions: &Predictions, dataset: &Dataset) -> Result<T, MetricError> {
    let preds = ordered_predictions(predictions, dataset)?;
    let per: Vec<T> = dataset
        .samples
        .iter()
        .zip(preds)
        .map(|(s, p)| str_em::<T>(p, s))
        .collect();
    Ok(corpus_score(&per))
}
