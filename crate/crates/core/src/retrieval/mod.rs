//! Evidence retrieval: lexical (BM25), dense (precomputed vectors) and
//! uniform random, plus the retrieval upper-bound audit.

mod audit;
mod bm25;
mod dense;
mod index;
mod random;

pub use audit::{render_upper_bound_table, upper_bound_audit, AuditColumn, AuditRow, UpperBoundReport};
pub use bm25::{bm25_score, idf, retrieve_topk};
pub use dense::{
    inner_product, retrieve_dense, DenseVectorStore, HashingEmbedder, PrecomputedEmbedder, QueryEmbedder,
};
pub use index::{build_index, read_corpus, write_corpus, Passage, PassageIndex, Posting};
pub use random::retrieve_random;

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("duplicate pid '{0}'")]
    DuplicatePid(String),

    #[error("passage '{0}' has an empty body")]
    EmptyBody(String),

    #[error("unknown pid '{0}'")]
    UnknownPid(String),

    #[error("index is empty")]
    EmptyIndex,

    #[error("dimension mismatch: store has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("invalid retriever config: {0}")]
    InvalidConfig(String),

    #[error("query embedder failed: {0}")]
    Embedder(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage<T> {
    pub pid: String,
    pub score: T,
}

/// Ranked passages for one query: scores non-increasing, pids distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult<T> {
    pub query: String,
    pub ranked: Vec<ScoredPassage<T>>,
}

impl<T: Scalar> RetrievalResult<T> {
    pub fn pids(&self) -> Vec<String> {
        self.ranked.iter().map(|s| s.pid.clone()).collect()
    }

    /// Scores non-increasing and pids unique.
    pub fn is_well_formed(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.ranked.windows(2).all(|w| w[0].score >= w[1].score)
            && self.ranked.iter().all(|s| seen.insert(s.pid.as_str()))
    }
}

/// Sort descending by score, ties by ascending pid, keep `k`.
pub(crate) fn rank<T: Scalar>(mut candidates: Vec<ScoredPassage<T>>, k: usize) -> Vec<ScoredPassage<T>> {
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.pid.cmp(&b.pid))
    });
    candidates.truncate(k);
    candidates
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMethod {
    Bm25,
    Dense,
    Random,
}

impl RetrievalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RetrievalMethod::Bm25 => "bm25",
            RetrievalMethod::Dense => "dense",
            RetrievalMethod::Random => "random",
        }
    }
}

impl fmt::Display for RetrievalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RetrievalMethod {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(RetrievalMethod::Bm25),
            "dense" | "dpr" => Ok(RetrievalMethod::Dense),
            "random" => Ok(RetrievalMethod::Random),
            other => Err(RetrievalError::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrieverConfig<T> {
    pub method: RetrievalMethod,
    pub k: usize,
    /// random method only
    #[serde(default)]
    pub seed: Option<u64>,
    pub k1: T,
    pub b: T,
}

impl<T: Scalar> RetrieverConfig<T> {
    pub fn new(method: RetrievalMethod, k: usize) -> Self {
        Self {
            method,
            k,
            seed: None,
            k1: T::from_f64_lossy(DEFAULT_K1),
            b: T::from_f64_lossy(DEFAULT_B),
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k == 0 {
            return Err(RetrievalError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.k1 >= T::zero()) {
            return Err(RetrievalError::InvalidConfig("k1 must be non-negative".into()));
        }
        if !(self.b >= T::zero() && self.b <= T::one()) {
            return Err(RetrievalError::InvalidConfig("b must lie in [0, 1]".into()));
        }
        if self.method == RetrievalMethod::Random && self.seed.is_none() {
            return Err(RetrievalError::InvalidConfig(
                "random retrieval requires a seed".into(),
            ));
        }
        Ok(())
    }
}

/// A configured retriever over a passage index.
pub trait Retriever<T: Scalar>: Send + Sync {
    fn retrieve(&self, query: &str, k: usize) -> Result<RetrievalResult<T>, RetrievalError>;

    /// Passage lookup for the pids this retriever returns.
    fn index(&self) -> &PassageIndex;

    /// Short method name used in reports, e.g. `bm25`.
    fn tag(&self) -> String;

    /// Passages for a result, in rank order.
    fn passages_for(&self, result: &RetrievalResult<T>) -> Vec<Passage> {
        result
            .ranked
            .iter()
            .filter_map(|s| self.index().passage(&s.pid).cloned())
            .collect()
    }
}

pub struct Bm25Retriever<T> {
    index: Arc<PassageIndex>,
    k1: T,
    b: T,
}

impl<T: Scalar> Bm25Retriever<T> {
    pub fn new(index: Arc<PassageIndex>, k1: T, b: T) -> Self {
        Self { index, k1, b }
    }
}

impl<T: Scalar> Retriever<T> for Bm25Retriever<T> {
    fn retrieve(&self, query: &str, k: usize) -> Result<RetrievalResult<T>, RetrievalError> {
        Ok(retrieve_topk(&self.index, query, k, self.k1, self.b))
    }

    fn index(&self) -> &PassageIndex {
        &self.index
    }

    fn tag(&self) -> String {
        "bm25".into()
    }
}

pub struct DenseRetriever<T> {
    index: Arc<PassageIndex>,
    store: DenseVectorStore<T>,
    embedder: Box<dyn QueryEmbedder<T>>,
}

impl<T: Scalar> DenseRetriever<T> {
    /// Every store key must name a passage in the index.
    pub fn new(
        index: Arc<PassageIndex>,
        store: DenseVectorStore<T>,
        embedder: Box<dyn QueryEmbedder<T>>,
    ) -> Result<Self, RetrievalError> {
        if let Some(missing) = store.keys().iter().find(|k| index.passage(k).is_none()) {
            return Err(RetrievalError::UnknownPid(missing.clone()));
        }
        if embedder.dim() != store.dim() {
            return Err(RetrievalError::DimensionMismatch {
                expected: store.dim(),
                got: embedder.dim(),
            });
        }
        Ok(Self {
            index,
            store,
            embedder,
        })
    }
}

impl<T: Scalar> Retriever<T> for DenseRetriever<T> {
    fn retrieve(&self, query: &str, k: usize) -> Result<RetrievalResult<T>, RetrievalError> {
        retrieve_dense(&self.store, query, k, self.embedder.as_ref())
    }

    fn index(&self) -> &PassageIndex {
        &self.index
    }

    fn tag(&self) -> String {
        "dense".into()
    }
}

/// Uniform random passages; the per-query seed mixes the base seed with a
/// digest of the query so different questions draw different evidence.
pub struct RandomRetriever {
    index: Arc<PassageIndex>,
    seed: u64,
}

impl RandomRetriever {
    pub fn new(index: Arc<PassageIndex>, seed: u64) -> Self {
        Self { index, seed }
    }

    pub fn query_seed(&self, query: &str) -> u64 {
        let h = Sha256::digest(query.as_bytes());
        self.seed ^ u64::from_le_bytes(h[..8].try_into().expect("digest has 32 bytes"))
    }
}

impl<T: Scalar> Retriever<T> for RandomRetriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<RetrievalResult<T>, RetrievalError> {
        let mut r = retrieve_random(&self.index, k, self.query_seed(query))?;
        r.query = query.to_string();
        Ok(r)
    }

    fn index(&self) -> &PassageIndex {
        &self.index
    }

    fn tag(&self) -> String {
        "random".into()
    }
}

/// A retriever that never returns anything.
pub struct EmptyRetriever {
    index: PassageIndex,
}

impl EmptyRetriever {
    pub fn new() -> Self {
        Self {
            index: PassageIndex::default(),
        }
    }
}

impl Default for EmptyRetriever {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Retriever<T> for EmptyRetriever {
    fn retrieve(&self, query: &str, _k: usize) -> Result<RetrievalResult<T>, RetrievalError> {
        Ok(RetrievalResult {
            query: query.to_string(),
            ranked: Vec::new(),
        })
    }

    fn index(&self) -> &PassageIndex {
        &self.index
    }

    fn tag(&self) -> String {
        "none".into()
    }
}
