//! Extractive reading-comprehension oracle used by Disambig-F1.
//!
//! The real oracle is an external model behind [`QaOracle`]; the stubs here
//! bound the metric from above and below and keep tests model-free.

use super::normalize::{contains_folded, fold_for_match};
use crate::dataset::Dataset;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },

    #[error("oracle protocol violation: {0}")]
    Protocol(String),
}

/// Wire request for an external oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub request_id: String,
    pub question: String,
    pub context: String,
}

/// Wire reply; an empty `answer` is an abstention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub request_id: String,
    pub answer: String,
}

/// Stable id for an oracle request: the first 16 hex digits of
/// `sha256(context || 0 || question)`.
pub fn oracle_request_id(context: &str, question: &str) -> String {
    let mut h = Sha256::new();
    h.update(context.as_bytes());
    h.update([0u8]);
    h.update(question.as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// Predicts a short answer to `question` from `context`. Returns an empty
/// string to abstain. Must be deterministic for fixed inputs.
pub trait QaOracle: Send + Sync {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError>;

    fn name(&self) -> String {
        "oracle".to_string()
    }
}

impl<O: QaOracle + ?Sized> QaOracle for &O {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        (**self).answer(context, question)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

impl<O: QaOracle + ?Sized> QaOracle for Box<O> {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        (**self).answer(context, question)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

/// Always abstains.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullStub;

impl QaOracle for NullStub {
    fn answer(&self, _context: &str, _question: &str) -> Result<String, OracleError> {
        Ok(String::new())
    }

    fn name(&self) -> String {
        "null".to_string()
    }
}

/// Knows the gold aliases of every disambiguated question and returns the
/// first one that appears verbatim in the context, else abstains.
#[derive(Debug, Clone, Default)]
pub struct PerfectStub {
    gold: HashMap<String, Vec<String>>,
}

impl PerfectStub {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let mut gold: HashMap<String, Vec<String>> = HashMap::new();
        for d in dataset.samples.iter().flat_map(|s| &s.disambiguations) {
            gold.entry(d.disambiguated_question.clone())
                .or_default()
                .extend(d.accepted_answers.iter().cloned());
        }
        Self { gold }
    }
}

impl QaOracle for PerfectStub {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        let Some(aliases) = self.gold.get(question) else {
            return Ok(String::new());
        };
        let folded = fold_for_match(context);
        Ok(aliases
            .iter()
            .find(|a| contains_folded(&folded, a))
            .cloned()
            .unwrap_or_default())
    }

    fn name(&self) -> String {
        "perfect".to_string()
    }
}

/// Fixed answers keyed by disambiguated question; abstains otherwise.
#[derive(Debug, Clone, Default)]
pub struct CannedOracle {
    pub answers: HashMap<String, String>,
}

impl QaOracle for CannedOracle {
    fn answer(&self, _context: &str, question: &str) -> Result<String, OracleError> {
        Ok(self.answers.get(question).cloned().unwrap_or_default())
    }

    fn name(&self) -> String {
        "canned".to_string()
    }
}

type CacheKey = ([u8; 32], [u8; 32]);

fn digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

/// Memoizes an oracle on `(sha256(context), sha256(question))`.
///
/// Failed calls are not cached.
pub struct CachedOracle<O> {
    inner: O,
    cache: Mutex<HashMap<CacheKey, String>>,
    misses: AtomicUsize,
}

impl<O: QaOracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
            misses: AtomicUsize::new(0),
        }
    }

    /// Number of calls forwarded to the wrapped oracle.
    pub fn inner_calls(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("oracle cache poisoned").len()
    }
}

impl<O: QaOracle> QaOracle for CachedOracle<O> {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        let key = (digest(context), digest(question));
        if let Some(hit) = self.cache.lock().expect("oracle cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let answer = self.inner.answer(context, question)?;
        self.cache
            .lock()
            .expect("oracle cache poisoned")
            .insert(key, answer.clone());
        Ok(answer)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// Retries transport failures of an oracle; the final error reports the
/// attempt count.
pub struct RetryingOracle<O> {
    inner: O,
    retries: usize,
}

impl<O: QaOracle> RetryingOracle<O> {
    pub fn new(inner: O, retries: usize) -> Self {
        Self { inner, retries }
    }
}

impl<O: QaOracle> QaOracle for RetryingOracle<O> {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.inner.answer(context, question) {
                Err(OracleError::Transport { message, .. }) if attempts <= self.retries => {
                    log::warn!(
                        "oracle {} attempt {attempts} failed: {message}",
                        self.inner.name()
                    );
                }
                Err(OracleError::Transport { message, .. }) => {
                    return Err(OracleError::Transport { attempts, message })
                }
                other => return other,
            }
        }
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}
