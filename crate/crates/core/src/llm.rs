//! Text-generation backends.
//!
//! Every engine call sends a self-contained [`ChatExchange`]; there is no
//! conversation state to clear between calls. [`complete`] is the single
//! entry point and attributes each call to a [`CallKind`] in the per-sample
//! [`GenerationLog`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::stages::StageId;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Decode(String),
    #[error("scripted fixture exhausted for sample '{sample_id}' ({kind} call)")]
    FixtureExhausted { sample_id: String, kind: CallKind },
    #[error("environment variable {0} is not set")]
    MissingToken(String),
    #[error("malformed exchange: {0}")]
    BadExchange(&'static str),
    #[error("fixture file {path}: {message}")]
    Fixture { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// One self-contained request: instruction context first, user turn last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    messages: Vec<ChatMessage>,
}

impl ChatExchange {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: system.into(),
                },
                ChatMessage {
                    role: Role::User,
                    content: user.into(),
                },
            ],
        }
    }

    pub fn from_messages(messages: Vec<ChatMessage>) -> Result<Self, LlmError> {
        match (messages.first(), messages.last()) {
            (Some(first), Some(last)) if messages.len() >= 2 => {
                if first.role != Role::System {
                    return Err(LlmError::BadExchange("first message must be the system context"));
                }
                if last.role != Role::User {
                    return Err(LlmError::BadExchange("last message must be a user turn"));
                }
                Ok(Self { messages })
            }
            _ => Err(LlmError::BadExchange("need a system and a user message")),
        }
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn user_prompt(&self) -> &str {
        &self.messages.last().expect("validated").content
    }

    pub fn char_len(&self) -> usize {
        self.messages.iter().map(|m| m.content.chars().count()).sum()
    }

    /// SHA-256 over the role-tagged message texts, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for m in &self.messages {
            h.update(format!("{:?}", m.role).as_bytes());
            h.update([0u8]);
            h.update(m.content.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Sampling parameters. The defaults are the fixed engine settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub n_samples: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            top_p: 0.9,
            max_tokens: 2048,
            n_samples: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Planning,
    CodeGeneration,
    ReGeneration,
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CallKind::Planning => "planning",
            CallKind::CodeGeneration => "code_generation",
            CallKind::ReGeneration => "re_generation",
        })
    }
}

/// Identifies the caller of a backend request.
#[derive(Debug, Clone, Copy)]
pub struct RequestContext<'a> {
    pub sample_id: &'a str,
    pub stage: StageId,
    pub kind: CallKind,
}

pub trait Backend: Send + Sync {
    fn generate(
        &self,
        ctx: &RequestContext<'_>,
        exchange: &ChatExchange,
        params: &GenerationParams,
    ) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationEntry {
    pub kind: CallKind,
    pub stage: StageId,
    pub prompt_chars: usize,
    pub response_chars: usize,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub planning: u32,
    pub codegen: u32,
    pub regen: u32,
}

impl CallCounts {
    pub fn total(&self) -> u32 {
        self.planning + self.codegen + self.regen
    }
}

/// Per-sample call accounting.
#[derive(Debug, Clone, Default)]
pub struct GenerationLog {
    counts: CallCounts,
    entries: Vec<GenerationEntry>,
}

impl GenerationLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, entry: GenerationEntry) {
        match entry.kind {
            CallKind::Planning => self.counts.planning += 1,
            CallKind::CodeGeneration => self.counts.codegen += 1,
            CallKind::ReGeneration => self.counts.regen += 1,
        }
        self.entries.push(entry);
    }

    pub fn snapshot(&self) -> CallCounts {
        self.counts
    }

    pub fn entries(&self) -> &[GenerationEntry] {
        &self.entries
    }
}

pub fn log_snapshot(log: &GenerationLog) -> CallCounts {
    log.snapshot()
}

/// Sends one exchange and records the call, successful or not, under `kind`.
pub fn complete(
    backend: &dyn Backend,
    sample_id: &str,
    stage: StageId,
    exchange: &ChatExchange,
    params: &GenerationParams,
    kind: CallKind,
    log: &mut GenerationLog,
) -> Result<String, LlmError> {
    let ctx = RequestContext {
        sample_id,
        stage,
        kind,
    };
    let started = Instant::now();
    let result = backend.generate(&ctx, exchange, params);
    log.record(GenerationEntry {
        kind,
        stage,
        prompt_chars: exchange.char_len(),
        response_chars: result.as_ref().map_or(0, |r| r.chars().count()),
        latency_ms: started.elapsed().as_millis() as u64,
    });
    result
}

/// On-disk scripted fixture.
///
/// Lookup order per request: exact exchange fingerprint in `keyed`, then the
/// sample's own queue in `queues`, then `default_queue`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedFixture {
    #[serde(default)]
    pub queues: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub default_queue: Vec<String>,
    #[serde(default)]
    pub keyed: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub sample_id: String,
    pub kind: CallKind,
    pub stage: StageId,
    pub exchange: ChatExchange,
    pub params: GenerationParams,
}

/// Deterministic backend for tests and dry runs.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
    default_queue: Mutex<VecDeque<String>>,
    keyed: HashMap<String, String>,
    requests: Mutex<Vec<RecordedRequest>>,
    invocations: AtomicU64,
}

impl ScriptedBackend {
    pub fn queue<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            default_queue: Mutex::new(responses.into_iter().map(Into::into).collect()),
            ..Self::default()
        }
    }

    pub fn keyed(map: HashMap<String, String>) -> Self {
        Self {
            keyed: map,
            ..Self::default()
        }
    }

    pub fn from_fixture(fixture: ScriptedFixture) -> Self {
        Self {
            queues: Mutex::new(
                fixture
                    .queues
                    .into_iter()
                    .map(|(k, v)| (k, v.into_iter().collect()))
                    .collect(),
            ),
            default_queue: Mutex::new(fixture.default_queue.into_iter().collect()),
            keyed: fixture.keyed.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let fail = |message: String| LlmError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let fixture: ScriptedFixture = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        Ok(Self::from_fixture(fixture))
    }

    /// Adds a per-sample queue.
    pub fn with_sample_queue<I, S>(self, sample_id: &str, responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.queues
            .lock()
            .unwrap()
            .insert(sample_id.to_string(), responses.into_iter().map(Into::into).collect());
        self
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn invocations(&self) -> u64 {
        self.invocations.load(Ordering::SeqCst)
    }

    pub fn remaining(&self, sample_id: &str) -> Option<usize> {
        self.queues.lock().unwrap().get(sample_id).map(VecDeque::len)
    }
}

impl Backend for ScriptedBackend {
    fn generate(
        &self,
        ctx: &RequestContext<'_>,
        exchange: &ChatExchange,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        self.invocations.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(RecordedRequest {
            sample_id: ctx.sample_id.to_string(),
            kind: ctx.kind,
            stage: ctx.stage,
            exchange: exchange.clone(),
            params: *params,
        });
        if let Some(r) = self.keyed.get(&exchange.fingerprint()) {
            return Ok(r.clone());
        }
        let exhausted = || LlmError::FixtureExhausted {
            sample_id: ctx.sample_id.to_string(),
            kind: ctx.kind,
        };
        if let Some(queue) = self.queues.lock().unwrap().get_mut(ctx.sample_id) {
            return queue.pop_front().ok_or_else(exhausted);
        }
        self.default_queue
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(exhausted)
    }
}

/// OpenAI-compatible chat-completions client.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    model: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    max_attempts: u32,
    backoff: Duration,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    n: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

pub const HTTP_MAX_ATTEMPTS: u32 = 3;

impl HttpBackend {
    /// `token_env` names the environment variable holding the bearer token;
    /// `None` sends no authorization header.
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        token_env: Option<&str>,
    ) -> Result<Self, LlmError> {
        let token = match token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmError::MissingToken(var.to_string()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(180))
            .build()
            .map_err(|e| LlmError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.into(),
            model: model.into(),
            token,
            client,
            max_attempts: HTTP_MAX_ATTEMPTS,
            backoff: Duration::from_secs(1),
        })
    }

    /// Base delay between attempts; doubles after each failure.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, (bool, LlmError)> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            (
                true,
                LlmError::Transport {
                    attempts: 0,
                    message: e.to_string(),
                },
            )
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            (
                true,
                LlmError::Transport {
                    attempts: 0,
                    message: e.to_string(),
                },
            )
        })?;
        if !status.is_success() {
            let retry = status.as_u16() == 429 || status.is_server_error();
            return Err((
                retry,
                LlmError::Status {
                    status: status.as_u16(),
                    body: text,
                },
            ));
        }
        let parsed: WireResponse =
            serde_json::from_str(&text).map_err(|e| (false, LlmError::Decode(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| (false, LlmError::Decode("no choices[0].message.content".into())))
    }
}

impl Backend for HttpBackend {
    fn generate(
        &self,
        _ctx: &RequestContext<'_>,
        exchange: &ChatExchange,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        let body = WireRequest {
            model: &self.model,
            messages: exchange.messages(),
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
            n: params.n_samples,
        };
        let mut delay = self.backoff;
        let mut attempt = 1;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((true, err)) if attempt < self.max_attempts => {
                    log::warn!("llm attempt {attempt} failed: {err}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err((_, LlmError::Transport { message, .. })) => {
                    return Err(LlmError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err((_, err)) => return Err(err),
            }
        }
    }
}
