//! Reading a class label out of a model completion.

use serde::{Deserialize, Serialize};

use super::prompt::PromptMode;
use crate::corpus::GenderLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierOutput {
    pub label: GenderLabel,
    pub reasoning: Option<String>,
    /// The completion exactly as returned.
    pub raw: String,
}

fn trim_punctuation(s: &str) -> &str {
    s.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Byte offset just past the last case-insensitive occurrence of `marker`.
fn after_last(haystack: &str, marker: &str) -> Option<(usize, usize)> {
    let lower = haystack.to_ascii_lowercase();
    let start = lower.rfind(&marker.to_ascii_lowercase())?;
    Some((start, start + marker.len()))
}

fn first_word(s: &str) -> &str {
    let s = s.trim_start_matches(|c: char| !c.is_alphanumeric());
    let end = s.find(|c: char| !c.is_alphabetic()).unwrap_or(s.len());
    &s[..end]
}

/// Parses a completion; never fails, unreadable output becomes
/// [`GenderLabel::Unparseable`].
///
/// Plain modes accept the bare class word, optionally prefixed by `Class:`,
/// with surrounding whitespace and punctuation ignored. CoT reads the word
/// after the last `Class:` marker and the text after `Reasoning:`.
pub fn parse_response(raw: &str, mode: PromptMode) -> ClassifierOutput {
    let (label, reasoning) = match mode {
        PromptMode::CoT => parse_cot(raw),
        _ => (parse_plain(raw), None),
    };
    ClassifierOutput {
        label,
        reasoning,
        raw: raw.to_string(),
    }
}

fn parse_plain(raw: &str) -> GenderLabel {
    let mut body = trim_punctuation(raw);
    if body.get(..6).is_some_and(|p| p.eq_ignore_ascii_case("class:")) {
        body = trim_punctuation(&body[6..]);
    }
    GenderLabel::parse_class(body).unwrap_or(GenderLabel::Unparseable)
}

fn parse_cot(raw: &str) -> (GenderLabel, Option<String>) {
    let class_span = after_last(raw, "class:");
    let label = class_span
        .and_then(|(_, end)| GenderLabel::parse_class(first_word(&raw[end..])))
        .unwrap_or(GenderLabel::Unparseable);

    let reasoning = after_last(raw, "reasoning:").map(|(_, end)| {
        let stop = match class_span {
            Some((class_start, _)) if class_start > end => class_start,
            _ => raw.len(),
        };
        raw[end..stop]
            .trim_matches(|c: char| c == '*' || c.is_whitespace())
            .to_string()
    });
    (label, reasoning.filter(|r| !r.is_empty()))
}
