//! Blocking chat-completions client with bounded retries and caching.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::cache::{CacheKey, CachedCompletion, CompletionCache};
use super::parse::{parse_response, ClassifierOutput};
use super::prompt::{build_prompt, ChatMessage, PromptMode};
use super::LlmError;
use crate::corpus::{Document, LabelSet};

/// Where and how to send classification requests.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key: None,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// Classification requests are always sent at temperature 0.
    pub fn classification(model: &str, messages: Vec<ChatMessage>) -> Self {
        Self {
            model: model.to_string(),
            messages,
            temperature: 0.0,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        })
    }
}

/// `choices[0].message.content` of a chat-completions response body.
pub fn extract_content(body: &str) -> Result<String, LlmError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedEnvelope(format!("invalid JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::MalformedEnvelope("missing choices[0].message.content".into()))
}

/// LLM gender-bias classifier over one endpoint and model.
///
/// Shareable across threads; all network I/O goes through [`Classifier::complete`].
#[derive(Debug)]
pub struct Classifier {
    config: EndpointConfig,
    cache: CompletionCache,
    agent: ureq::Agent,
    requests: AtomicUsize,
}

impl Classifier {
    pub fn new(config: EndpointConfig, cache: CompletionCache) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self {
            config,
            cache,
            agent,
            requests: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn cache(&self) -> &CompletionCache {
        &self.cache
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    /// Sends one request, retrying transport failures and 5xx responses with
    /// exponential backoff. 4xx responses fail immediately.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let body = request.to_json().to_string();
        let attempts = self.config.max_attempts.max(1);
        let mut backoff = self.config.initial_backoff;
        let mut last_error = None;
        for attempt in 1..=attempts {
            if attempt > 1 {
                thread::sleep(backoff);
                backoff = backoff.saturating_mul(2);
            }
            self.requests.fetch_add(1, Ordering::Relaxed);
            let mut call = self
                .agent
                .post(&self.config.url)
                .set("Content-Type", "application/json");
            if let Some(key) = &self.config.api_key {
                call = call.set("Authorization", &format!("Bearer {key}"));
            }
            match call.send_string(&body) {
                Ok(response) => {
                    let text = response
                        .into_string()
                        .map_err(|e| LlmError::Transport(format!("reading response body: {e}")))?;
                    return extract_content(&text);
                }
                Err(ureq::Error::Status(status, response)) => {
                    let detail = response.into_string().unwrap_or_default();
                    let err = LlmError::Http { status, body: detail };
                    if !(500..600).contains(&status) {
                        return Err(err);
                    }
                    last_error = Some(err);
                }
                Err(ureq::Error::Transport(t)) => last_error = Some(LlmError::Transport(t.to_string())),
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts,
            last: Box::new(last_error.expect("at least one attempt was made")),
        })
    }

    /// Classifies one document; a cache hit performs no network I/O.
    pub fn classify(&self, doc: &Document, mode: PromptMode) -> Result<ClassifierOutput, LlmError> {
        let key = CacheKey::new(&self.config.model, mode, doc);
        if let Some(hit) = self.cache.get(&key) {
            let mut output = parse_response(&hit.raw, mode);
            output.label = hit.label;
            return Ok(output);
        }
        let messages = build_prompt(mode, doc)?;
        let raw = self.complete(&ChatRequest::classification(&self.config.model, messages))?;
        let output = parse_response(&raw, mode);
        self.cache.insert(
            key,
            CachedCompletion {
                label: output.label,
                raw,
            },
        )?;
        Ok(output)
    }

    /// Classifies `docs` with at most `parallelism` requests in flight.
    ///
    /// Failures are collected per document; one failure never aborts the
    /// batch. Results do not depend on completion order.
    pub fn batch_classify(
        &self,
        docs: &[Document],
        mode: PromptMode,
        parallelism: usize,
    ) -> Result<BatchOutcome, LlmError> {
        if parallelism == 0 {
            return Err(LlmError::InvalidParallelism);
        }
        let slots: Vec<Mutex<Option<Result<ClassifierOutput, LlmError>>>> =
            docs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = parallelism.min(docs.len());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(doc) = docs.get(idx) else { break };
                    let result = self.classify(doc, mode);
                    *slots[idx].lock().expect("slot poisoned") = Some(result);
                });
            }
        });

        let mut labels = LabelSet::new(provenance(&self.config.model, mode));
        let mut outputs = Vec::with_capacity(docs.len());
        let mut failures = Vec::new();
        for (doc, slot) in docs.iter().zip(slots) {
            match slot.into_inner().expect("slot poisoned").expect("every slot is filled") {
                Ok(output) => {
                    labels
                        .insert(doc.doc_id.clone(), output.label)
                        .expect("llm provenance admits every label");
                    outputs.push((doc.doc_id.clone(), output));
                }
                Err(error) => failures.push(BatchFailure {
                    doc_id: doc.doc_id.clone(),
                    error,
                }),
            }
        }
        Ok(BatchOutcome {
            labels,
            outputs,
            failures,
        })
    }
}

/// `llm:{model}:{mode}`
pub fn provenance(model: &str, mode: PromptMode) -> String {
    format!("llm:{model}:{}", mode.as_str())
}

#[derive(Debug)]
pub struct BatchFailure {
    pub doc_id: String,
    pub error: LlmError,
}

/// Labels for every document that succeeded plus one record per failure.
#[derive(Debug)]
pub struct BatchOutcome {
    pub labels: LabelSet,
    /// Per-document outputs in input order.
    pub outputs: Vec<(String, ClassifierOutput)>,
    pub failures: Vec<BatchFailure>,
}

impl BatchOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}
