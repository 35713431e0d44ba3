//! Classification prompts for the LLM bias detector.
//!
//! The prompt is one user message: the instruction block, the demonstrations
//! for the chosen mode, then the target passage followed by `Class:`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;

/// Bumped whenever any prompt text changes; part of every cache key.
pub const TEMPLATE_VERSION: &str = "gender-bias-prompt/v1";

const INSTRUCTION: &str = "Instruction: You are a document gender bias detector tasked with classifying documents into three categories: Male, Female, or Neutral.
A document is classified as \"Male\" if it shows bias toward the male gender, \"Female\" if it shows bias toward the female gender, and \"Neutral\" if it is unbiased\u{2014}either treating both genders equally or not focusing on any particular gender.

When classifying documents, take into account:
1. The frequency of gender-specific terms such as \"male\", \"female\", \"she\", and \"he\".
2. The fairness and balance of information and analysis for all genders.
3. The equal representation of all genders in the document's lead.

";

const ANSWER_ONLY: &str = "Please, generate only the predicted class for the document, which must be strictly one of the following: Male, Female, or Neutral.";

const ANSWER_WITH_REASONING: &str = "You must provide your reasoning and present the answer in the following format: the predicted class, strictly limited to Male, Female, or Neutral, must be included after the \"Class:\" label, and the reasoning must follow the \"Reasoning:\" label.";

/// Demonstrations in order: neutral, male, female.
const DEMONSTRATIONS: [(&str, &str); 3] = [
    (
        "This helpful article dives into the 10-step Korean skincare routine for you and examines each of the steps in detail.",
        "Neutral",
    ),
    (
        "It\u{2019}s often frustrating for men to hear the popular sentiment that women make better entrepreneurs than men. It\u{2019}s not fashionable to argue, but the truth is that the number of female-owned businesses are growing at a faster rate. In any case, we\u{2019}d like to present 7 reasons why men make great entrepreneurs.",
        "Male",
    ),
    (
        "Popular press would suggest if you\u{2019}re a mom you\u{2019}re always happy, fulfilled and joyous\u{2014}and if you\u{2019}re not, somehow you\u{2019}re not measuring up. Being a mom can be tough. In fact, as the saying goes, if you don\u{2019}t find it hard sometimes, you may not be paying attention.",
        "Female",
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    ZeroShot,
    OneShot,
    ThreeShot,
    CoT,
}

impl PromptMode {
    pub const ALL: [PromptMode; 4] = [
        PromptMode::ZeroShot,
        PromptMode::OneShot,
        PromptMode::ThreeShot,
        PromptMode::CoT,
    ];

    /// Stable tag used in provenance strings and cache keys.
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero-shot",
            PromptMode::OneShot => "one-shot",
            PromptMode::ThreeShot => "three-shot",
            PromptMode::CoT => "cot",
        }
    }

    fn demonstration_count(self) -> usize {
        match self {
            PromptMode::ZeroShot | PromptMode::CoT => 0,
            PromptMode::OneShot => 1,
            PromptMode::ThreeShot => 3,
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" | "zero-shot" | "zeroshot" => Ok(PromptMode::ZeroShot),
            "one" | "one-shot" | "oneshot" => Ok(PromptMode::OneShot),
            "three" | "three-shot" | "threeshot" | "few-shot" => Ok(PromptMode::ThreeShot),
            "cot" => Ok(PromptMode::CoT),
            other => Err(format!("unknown prompt mode `{other}` (expected zero|one|three|cot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("document `{0}` has no text or title to classify")]
pub struct EmptyDocument(pub String);

/// The full prompt text for `doc` under `mode`.
pub fn render_prompt(mode: PromptMode, doc: &Document) -> Result<String, EmptyDocument> {
    if doc.is_empty() {
        return Err(EmptyDocument(doc.doc_id.clone()));
    }
    let mut prompt = String::with_capacity(2048);
    prompt.push_str(INSTRUCTION);
    prompt.push_str(match mode {
        PromptMode::CoT => ANSWER_WITH_REASONING,
        _ => ANSWER_ONLY,
    });
    prompt.push_str("\n\n");
    for (i, (text, class)) in DEMONSTRATIONS.iter().take(mode.demonstration_count()).enumerate() {
        prompt.push_str(&format!("Document {}: {text}\nClass: {class}\n\n", i + 1));
    }
    prompt.push_str("Document: ");
    prompt.push_str(&doc.full_text());
    prompt.push_str("\nClass:");
    Ok(prompt)
}

/// Messages for one classification request: a single user message.
pub fn build_prompt(mode: PromptMode, doc: &Document) -> Result<Vec<ChatMessage>, EmptyDocument> {
    Ok(vec![ChatMessage::user(render_prompt(mode, doc)?)])
}
