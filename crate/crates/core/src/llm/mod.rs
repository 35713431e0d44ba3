//! LLM-based gender bias detection: prompts, response parsing, an
//! OpenAI-compatible client and a completion cache.

mod cache;
mod client;
mod parse;
mod prompt;

pub use cache::{CacheKey, CachedCompletion, CompletionCache};
pub use client::{extract_content, provenance, BatchFailure, BatchOutcome, ChatRequest, Classifier, EndpointConfig};
pub use parse::{parse_response, ClassifierOutput};
pub use prompt::{build_prompt, render_prompt, ChatMessage, EmptyDocument, PromptMode, TEMPLATE_VERSION};

use thiserror::Error;

/// Classification failures. A completion that names no class is not an
/// error; it parses to [`crate::GenderLabel::Unparseable`].
#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    EmptyDocument(#[from] EmptyDocument),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response envelope: {0}")]
    MalformedEnvelope(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<LlmError> },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("parallelism must be >= 1")]
    InvalidParallelism,
}
