//! Model inputs and answers for every modeling scenario: the two non-neural
//! baselines, prompt construction and calls to an external generator.

mod backend;
mod prompt;
mod training;

pub use backend::{
    repeated_ngram, BackendError, CannedStub, EchoStub, GenerationRequest, GenerationResponse,
    GeneratorBackend, RetryingBackend,
};
pub use prompt::{
    build_prompt, parse_prompt, prompt_words, sanitize_field, sanitize_title, ParsedPrompt, PromptSpec,
    CONTEXT_MARKER, QUESTION_MARKER, TITLE_SEPARATOR,
};
pub use training::{emit_training_config, IntermediateStage, TrainingConfig, TrainingProfile};

use crate::retrieval::Passage;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("question is empty")]
    EmptyQuestion,

    #[error("target word count must be at least 1")]
    InvalidTarget,

    #[error("retrieval-only answers need at least one passage")]
    NoPassages,

    #[error("invalid decoding config: {0}")]
    InvalidDecoding(String),

    #[error("backend returned empty text for '{0}'")]
    EmptyText(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("unknown training profile '{0}'")]
    UnknownProfile(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
}

/// Beam-search settings passed verbatim to the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub beams: u32,
    pub max_length_tokens: u32,
    pub no_repeat_ngram: u32,
}

impl Default for DecodingConfig {
    /// 5 beams, at most 100 tokens, no repeated trigram.
    fn default() -> Self {
        Self {
            beams: 5,
            max_length_tokens: 100,
            no_repeat_ngram: 3,
        }
    }
}

impl DecodingConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.beams == 0 {
            return Err(GenerationError::InvalidDecoding(
                "beams must be at least 1".into(),
            ));
        }
        if self.max_length_tokens == 0 {
            return Err(GenerationError::InvalidDecoding(
                "max_length_tokens must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    QuestionRepeat,
    RetrievalOnly,
    ClosedBook,
    OpenBook,
    RandomRetrieval,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::QuestionRepeat,
        Scenario::RetrievalOnly,
        Scenario::ClosedBook,
        Scenario::OpenBook,
        Scenario::RandomRetrieval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::QuestionRepeat => "question_repeat",
            Scenario::RetrievalOnly => "retrieval_only",
            Scenario::ClosedBook => "closed_book",
            Scenario::OpenBook => "open_book",
            Scenario::RandomRetrieval => "random_retrieval",
        }
    }

    pub fn uses_retriever(self) -> bool {
        matches!(
            self,
            Scenario::RetrievalOnly | Scenario::OpenBook | Scenario::RandomRetrieval
        )
    }

    pub fn uses_generator(self) -> bool {
        matches!(
            self,
            Scenario::ClosedBook | Scenario::OpenBook | Scenario::RandomRetrieval
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|sc| sc.as_str() == key)
            .ok_or_else(|| GenerationError::UnknownScenario(s.to_string()))
    }
}

/// A long-form answer and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedAnswer {
    pub sample_id: String,
    pub text: String,
    pub scenario: Scenario,
    pub retriever_tag: String,
    pub k: usize,
    /// `None` for the non-neural baselines
    pub decoding: Option<DecodingConfig>,
}

/// Repeat the question the fewest whole times that reaches `target_words`.
pub fn question_repeat_baseline(
    sample_id: &str,
    question: &str,
    target_words: usize,
) -> Result<GeneratedAnswer, GenerationError> {
    if target_words == 0 {
        return Err(GenerationError::InvalidTarget);
    }
    let words: Vec<&str> = question.split_whitespace().collect();
    if words.is_empty() {
        return Err(GenerationError::EmptyQuestion);
    }
    let once = words.join(" ");
    let repetitions = target_words.div_ceil(words.len());
    Ok(GeneratedAnswer {
        sample_id: sample_id.to_string(),
        text: vec![once.as_str(); repetitions].join(" "),
        scenario: Scenario::QuestionRepeat,
        retriever_tag: "none".into(),
        k: 0,
        decoding: None,
    })
}

/// The retrieved passages themselves, bodies joined by single spaces.
pub fn retrieval_only_answer(
    sample_id: &str,
    passages: &[Passage],
    retriever_tag: &str,
) -> Result<GeneratedAnswer, GenerationError> {
    if passages.is_empty() {
        return Err(GenerationError::NoPassages);
    }
    Ok(GeneratedAnswer {
        sample_id: sample_id.to_string(),
        text: passages
            .iter()
            .map(|p| p.body.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        scenario: Scenario::RetrievalOnly,
        retriever_tag: retriever_tag.to_string(),
        k: passages.len(),
        decoding: None,
    })
}

/// Provenance attached to a generated answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: Scenario,
    pub retriever_tag: String,
    pub k: usize,
}

/// Send one prompt to the backend and wrap the reply. The text is returned
/// verbatim; the decoding config goes out unmodified.
pub fn generate(
    backend: &dyn GeneratorBackend,
    sample_id: &str,
    prompt: &str,
    decoding: &DecodingConfig,
    provenance: Provenance,
) -> Result<GeneratedAnswer, GenerationError> {
    decoding.validate()?;
    let request = GenerationRequest::new(sample_id, prompt, decoding);
    let text = backend.generate(&request)?;
    if text.trim().is_empty() {
        return Err(GenerationError::EmptyText(sample_id.to_string()));
    }
    Ok(GeneratedAnswer {
        sample_id: sample_id.to_string(),
        text,
        scenario: provenance.scenario,
        retriever_tag: provenance.retriever_tag,
        k: provenance.k,
        decoding: Some(*decoding),
    })
}
