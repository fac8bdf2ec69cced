//! SQuAD-style answer normalization shared by every text metric and by the
//! retrieval tokenizer.

use serde::{Deserialize, Serialize};
use std::ops::Deref;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lowercased, punctuation-free, article-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedTokens(Vec<String>);

impl NormalizedTokens {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for NormalizedTokens {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// Lowercase, drop ASCII punctuation, split on whitespace, drop articles.
///
/// Punctuation is deleted rather than replaced, so `Louis-Philippe` becomes
/// the single token `louisphilippe`.
pub fn normalize(text: &str) -> NormalizedTokens {
    let lowered: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    NormalizedTokens(
        lowered
            .split_whitespace()
            .filter(|t| !ARTICLES.contains(t))
            .map(str::to_string)
            .collect(),
    )
}

/// Case-fold and collapse whitespace runs, punctuation preserved. Used for
/// verbatim answer matching (Str-EM and the retrieval upper bound).
pub fn fold_for_match(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// True when `needle` occurs verbatim in `haystack` after folding both.
/// An empty needle never matches.
pub fn contains_folded(haystack_folded: &str, needle: &str) -> bool {
    let needle = fold_for_match(needle);
    !needle.is_empty() && haystack_folded.contains(&needle)
}
