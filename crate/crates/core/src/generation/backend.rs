//! Generator backend protocol and the deterministic stubs used in tests.

use super::prompt::parse_prompt;
use super::DecodingConfig;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },

    #[error("malformed backend reply: {0}")]
    Protocol(String),
}

impl BackendError {
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::Transport { .. })
    }
}

/// Wire request sent to a generator backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub request_id: String,
    pub prompt: String,
    pub beams: u32,
    pub max_length_tokens: u32,
    pub no_repeat_ngram: u32,
}

impl GenerationRequest {
    pub fn new(request_id: impl Into<String>, prompt: impl Into<String>, decoding: &DecodingConfig) -> Self {
        Self {
            request_id: request_id.into(),
            prompt: prompt.into(),
            beams: decoding.beams,
            max_length_tokens: decoding.max_length_tokens,
            no_repeat_ngram: decoding.no_repeat_ngram,
        }
    }

    pub fn decoding(&self) -> DecodingConfig {
        DecodingConfig {
            beams: self.beams,
            max_length_tokens: self.max_length_tokens,
            no_repeat_ngram: self.no_repeat_ngram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub request_id: String,
    pub text: String,
}

/// Anything that turns a rendered prompt into text.
pub trait GeneratorBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError>;

    fn name(&self) -> String;
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for &B {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for Box<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

fn truncate_words(text: &str, max_words: usize) -> String {
    text.split_whitespace()
        .take(max_words)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Copies the passage bodies of the prompt (or the question when there are
/// none), truncated to `max_length_tokens` words.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoStub;

impl GeneratorBackend for EchoStub {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let parsed = parse_prompt(&request.prompt)
            .ok_or_else(|| BackendError::Protocol("prompt does not follow the template".into()))?;
        let source = if parsed.passages.is_empty() {
            parsed.question
        } else {
            parsed
                .passages
                .iter()
                .map(|(_, body)| body.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        Ok(truncate_words(&source, request.max_length_tokens as usize))
    }

    fn name(&self) -> String {
        "echo".into()
    }
}

/// Returns a fixed string per request id.
#[derive(Debug, Clone, Default)]
pub struct CannedStub {
    pub answers: HashMap<String, String>,
}

impl CannedStub {
    pub fn new(answers: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            answers: answers.into_iter().collect(),
        }
    }
}

impl GeneratorBackend for CannedStub {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        self.answers
            .get(&request.request_id)
            .cloned()
            .ok_or_else(|| BackendError::Protocol(format!("no canned answer for '{}'", request.request_id)))
    }

    fn name(&self) -> String {
        "canned".into()
    }
}

/// Retries transient failures; the final error reports the attempt count.
pub struct RetryingBackend<B> {
    inner: B,
    retries: usize,
}

impl<B: GeneratorBackend> RetryingBackend<B> {
    pub fn new(inner: B, retries: usize) -> Self {
        Self { inner, retries }
    }
}

impl<B: GeneratorBackend> GeneratorBackend for RetryingBackend<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.inner.generate(request) {
                Err(BackendError::Transport { message, .. }) if attempts <= self.retries => {
                    log::warn!(
                        "backend {} attempt {attempts} failed for {}: {message}",
                        self.inner.name(),
                        request.request_id
                    );
                }
                Err(BackendError::Transport { message, .. }) => {
                    return Err(BackendError::Transport { attempts, message })
                }
                other => return other,
            }
        }
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// First word n-gram that occurs twice in `text`, if any.
pub fn repeated_ngram(text: &str, n: usize) -> Option<Vec<String>> {
    if n == 0 {
        return None;
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut seen = std::collections::HashSet::new();
    words
        .windows(n)
        .find(|w| !seen.insert(*w))
        .map(|w| w.iter().map(|s| s.to_string()).collect())
}
