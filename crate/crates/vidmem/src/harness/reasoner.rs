//! The cloud reasoner abstraction: a recording stub for tests and simulation,
//! and an OpenAI-compatible chat-completion client for real services.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::embedding::base64_encode;
use crate::error::{Error, Result};
use crate::hashmix::fnv1a64;
use crate::imageio;
use crate::types::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReasonerBackendKind {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReasonerDescriptor {
    pub backend: ReasonerBackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub timeout_s: f64,
    pub retries: u32,
}

impl Default for ReasonerDescriptor {
    fn default() -> Self {
        ReasonerDescriptor {
            backend: ReasonerBackendKind::Stub,
            endpoint: None,
            model: "default".into(),
            timeout_s: 30.0,
            retries: 1,
        }
    }
}

/// Exact payload the stub saw, for test inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedCall {
    pub query: String,
    /// Frame ids in the order they were handed over.
    pub frame_ids: Vec<u64>,
    pub digest: String,
}

/// Deterministic recording stub.
///
/// The answer is `answered with <n> frames, digest <h>` where `h` is the
/// fnv1a-64 hex digest of the canonical JSON payload
/// `{"query": ..., "frames": [{"frame_id", "timestamp"}...]}`.
#[derive(Debug, Clone, Default)]
pub struct StubReasoner {
    calls: Arc<Mutex<Vec<RecordedCall>>>,
}

impl StubReasoner {
    pub fn new() -> Self {
        StubReasoner::default()
    }

    pub fn calls(&self) -> Vec<RecordedCall> {
        self.calls.lock().unwrap().clone()
    }

    fn reason(&self, query: &str, keyframes: &[Frame]) -> Result<String> {
        let payload = json!({
            "query": query,
            "frames": keyframes
                .iter()
                .map(|f| json!({"frame_id": f.frame_id, "timestamp": f.timestamp}))
                .collect::<Vec<_>>(),
        });
        let bytes = serde_json::to_vec(&payload)?;
        let digest = format!("{:016x}", fnv1a64(&bytes));
        self.calls.lock().unwrap().push(RecordedCall {
            query: query.to_string(),
            frame_ids: keyframes.iter().map(|f| f.frame_id).collect(),
            digest: digest.clone(),
        });
        Ok(format!("answered with {} frames, digest {digest}", keyframes.len()))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

/// OpenAI-compatible chat client: `POST <endpoint>/v1/chat/completions` with
/// one user message carrying the query text followed by base64 PNG image
/// parts in chronological order; the answer is the first choice's message
/// content.
#[derive(Debug, Clone)]
pub struct HttpReasoner {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    retries: u32,
}

impl HttpReasoner {
    pub fn new(endpoint: &str, model: &str, timeout_s: f64, retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs_f64(timeout_s)))
            .build()
            .into();
        HttpReasoner {
            agent,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            retries,
        }
    }

    fn reason(&self, query: &str, keyframes: &[Frame]) -> Result<String> {
        let mut content = vec![json!({"type": "text", "text": query})];
        for frame in keyframes {
            let png = imageio::encode_png(frame)?;
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", base64_encode(&png))},
            }));
        }
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
        });
        let url = format!("{}/v1/chat/completions", self.endpoint);
        let attempts = self.retries + 1;
        let mut last_error = String::new();
        for _ in 0..attempts {
            match self
                .agent
                .post(&url)
                .send_json(&body)
                .and_then(|mut resp| resp.body_mut().read_json::<ChatResponse>())
            {
                Ok(response) => {
                    return response
                        .choices
                        .first()
                        .map(|c| c.message.content.clone())
                        .ok_or_else(|| Error::Reasoner("response had no choices".into()));
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::Http {
            url,
            attempts,
            reason: last_error,
        })
    }
}

/// The reasoner backend in use.
#[derive(Debug, Clone)]
pub enum Reasoner {
    Stub(StubReasoner),
    Http(HttpReasoner),
}

impl Reasoner {
    pub fn from_descriptor(desc: &ReasonerDescriptor) -> Result<Self> {
        match desc.backend {
            ReasonerBackendKind::Stub => Ok(Reasoner::Stub(StubReasoner::new())),
            ReasonerBackendKind::Http => {
                let endpoint = desc
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| Error::Reasoner("http backend requires an endpoint".into()))?;
                Ok(Reasoner::Http(HttpReasoner::new(
                    endpoint,
                    &desc.model,
                    desc.timeout_s,
                    desc.retries,
                )))
            }
        }
    }

    /// Sends (query, keyframes) to the reasoner. Keyframes must be non-empty
    /// and are forwarded in the given (chronological) order.
    pub fn reason(&self, query: &str, keyframes: &[Frame]) -> Result<String> {
        if keyframes.is_empty() {
            return Err(Error::Reasoner("no keyframes to reason over".into()));
        }
        match self {
            Reasoner::Stub(stub) => stub.reason(query, keyframes),
            Reasoner::Http(http) => http.reason(query, keyframes),
        }
    }

    /// The recording stub behind this reasoner, when it is one.
    pub fn stub(&self) -> Option<&StubReasoner> {
        match self {
            Reasoner::Stub(s) => Some(s),
            Reasoner::Http(_) => None,
        }
    }
}
