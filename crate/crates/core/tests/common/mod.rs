//! In-process chat-completions mock shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use tiny_http::{Header, Response, Server};

/// `(passage, attempt)` -> `(status, content)`. `attempt` counts requests for
/// the same passage, starting at 1.
pub type Responder = dyn Fn(&str, usize) -> (u16, String) + Send + Sync;

pub struct MockServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    requests: Arc<AtomicUsize>,
    pub url: String,
}

/// The passage after the final `Document:` marker of the prompt.
pub fn passage_of(prompt: &str) -> String {
    let start = prompt.rfind("Document: ").map(|i| i + "Document: ".len()).unwrap_or(0);
    let rest = &prompt[start..];
    rest.strip_suffix("\nClass:").unwrap_or(rest).to_string()
}

fn envelope(content: &str) -> String {
    serde_json::json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    })
    .to_string()
}

impl MockServer {
    pub fn start(responder: impl Fn(&str, usize) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("tcp listener").port();
        let responder: Arc<Responder> = Arc::new(responder);
        let requests = Arc::new(AtomicUsize::new(0));
        let attempts: Arc<Mutex<HashMap<String, usize>>> = Arc::default();
        let workers = (0..8)
            .map(|_| {
                let server = Arc::clone(&server);
                let responder = Arc::clone(&responder);
                let requests = Arc::clone(&requests);
                let attempts = Arc::clone(&attempts);
                thread::spawn(move || {
                    while let Ok(mut request) = server.recv() {
                        requests.fetch_add(1, Ordering::SeqCst);
                        let mut body = String::new();
                        let _ = request.as_reader().read_to_string(&mut body);
                        let json: serde_json::Value = serde_json::from_str(&body).unwrap_or_default();
                        let prompt = json["messages"][0]["content"].as_str().unwrap_or_default();
                        let passage = passage_of(prompt);
                        let attempt = {
                            let mut map = attempts.lock().unwrap();
                            let n = map.entry(passage.clone()).or_insert(0);
                            *n += 1;
                            *n
                        };
                        let (status, content) = responder(&passage, attempt);
                        let payload = if status == 200 { envelope(&content) } else { content };
                        let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                        let _ = request.respond(
                            Response::from_string(payload)
                                .with_status_code(status)
                                .with_header(header),
                        );
                    }
                })
            })
            .collect();
        MockServer {
            server,
            workers,
            requests,
            url: format!("http://127.0.0.1:{port}/v1/chat/completions"),
        }
    }

    /// Labels by keyword: "woman"/"she" -> Female, "man"/"he" -> Male.
    pub fn keyword() -> Self {
        Self::start(|passage, _| (200, keyword_label(passage).to_string()))
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

pub fn keyword_label(passage: &str) -> &'static str {
    let words: Vec<String> = passage
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .collect();
    if words.iter().any(|w| w == "woman" || w == "she") {
        "Female"
    } else if words.iter().any(|w| w == "man" || w == "he") {
        "Male"
    } else {
        "Neutral"
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
