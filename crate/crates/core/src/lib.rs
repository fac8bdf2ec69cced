//! Evaluation workbench for long-form answers to ambiguous questions.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the CLI and service use.

pub mod annotation;
pub mod dataset;
pub mod generation;
pub mod harness;
pub mod metrics;
pub mod retrieval;
pub mod scalar;

pub type DatasetStats = dataset::DatasetStats<f64>;
pub type MetricReport = metrics::MetricReport<f64>;
pub type SampleMetrics = metrics::SampleMetrics<f64>;
pub type Evaluation = metrics::Evaluation<f64>;
pub type ScoredPassage = retrieval::ScoredPassage<f64>;
pub type RetrievalResult = retrieval::RetrievalResult<f64>;
pub type RetrieverConfig = retrieval::RetrieverConfig<f64>;
pub type DenseVectorStore = retrieval::DenseVectorStore<f64>;
pub type UpperBoundReport = retrieval::UpperBoundReport<f64>;
pub type AuditColumn = retrieval::AuditColumn<f64>;
pub type RunRecord = harness::RunRecord<f64>;
pub type PreferenceSummary = annotation::PreferenceSummary<f64>;
pub type MetricPreference = annotation::MetricPreference<f64>;
