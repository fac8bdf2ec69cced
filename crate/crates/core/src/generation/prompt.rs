//! Prompt rendering for the generator backend.
//!
//! Layout: `question: <q>` followed by ` context: <title> — <body>` per
//! passage in rank order. Fields are sanitized so the markers only ever
//! occur as separators, which makes rendering reversible.

use crate::retrieval::Passage;

pub const QUESTION_MARKER: &str = "question: ";
pub const CONTEXT_MARKER: &str = " context: ";
pub const TITLE_SEPARATOR: &str = " — ";

const RESERVED: &str = "context:";
const RESERVED_REPLACEMENT: &str = "context :";

/// Remove reserved separator sequences from a field and trim it.
///
/// Idempotent. Applied to passage text at ingestion and to questions and
/// titles at render time.
pub fn sanitize_field(text: &str) -> String {
    let text = if text.contains(RESERVED) {
        text.replace(RESERVED, RESERVED_REPLACEMENT)
    } else {
        text.to_string()
    };
    text.trim().to_string()
}

/// Titles additionally lose the em dash so the first ` — ` of a context
/// segment always ends the title.
pub fn sanitize_title(title: &str) -> String {
    sanitize_field(&title.replace('—', "-"))
}

/// The rendered input for one sample. `passages` is empty for closed book.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub question: String,
    pub passages: Vec<Passage>,
}

impl PromptSpec {
    pub fn new(question: &str, passages: &[Passage]) -> Self {
        Self {
            question: question.to_string(),
            passages: passages.to_vec(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from(QUESTION_MARKER);
        out.push_str(&sanitize_field(&self.question));
        for p in &self.passages {
            out.push_str(CONTEXT_MARKER);
            out.push_str(&sanitize_title(&p.title));
            out.push_str(TITLE_SEPARATOR);
            out.push_str(&sanitize_field(&p.body));
        }
        out
    }
}

/// Render a prompt for `question` over `passages` in the given order.
pub fn build_prompt(question: &str, passages: &[Passage]) -> String {
    PromptSpec::new(question, passages).render()
}

/// A parsed prompt: question plus `(title, body)` per passage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub question: String,
    pub passages: Vec<(String, String)>,
}

/// Inverse of [`build_prompt`] on sanitized fields.
pub fn parse_prompt(prompt: &str) -> Option<ParsedPrompt> {
    let rest = prompt.strip_prefix(QUESTION_MARKER)?;
    let mut segments = rest.split(CONTEXT_MARKER);
    let question = segments.next()?.to_string();
    let mut passages = Vec::new();
    for seg in segments {
        let (title, body) = seg.split_once(TITLE_SEPARATOR)?;
        passages.push((title.to_string(), body.to_string()));
    }
    Some(ParsedPrompt { question, passages })
}

/// Whitespace word count, logged per sample so backend truncation is auditable.
pub fn prompt_words(prompt: &str) -> usize {
    prompt.split_whitespace().count()
}
