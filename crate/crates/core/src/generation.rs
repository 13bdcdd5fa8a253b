//! Backends that turn a prompt into `n` ordered completions: an HTTP client
//! for completion/chat endpoints and an offline replay backend.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::GenerationError;
use crate::model::{Prompt, SuggestionInventory};
use crate::quality::ProcessLimiter;

pub const DEFAULT_N: usize = 10;
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 128;
pub const DEFAULT_CHAT_MAX_NEW_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt_text: String,
    pub n: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub model_id: String,
}

impl GenerationRequest {
    /// Request with defaults for the given backend kind.
    pub fn new(prompt_text: impl Into<String>, model_id: impl Into<String>, kind: BackendKind) -> Self {
        GenerationRequest {
            prompt_text: prompt_text.into(),
            n: DEFAULT_N,
            max_new_tokens: kind.default_max_new_tokens(),
            temperature: 0.8,
            top_p: 0.95,
            model_id: model_id.into(),
        }
    }

    /// Same parameters, different prompt text.
    pub fn with_prompt(&self, prompt_text: impl Into<String>) -> Self {
        GenerationRequest {
            prompt_text: prompt_text.into(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.n == 0 {
            return Err(GenerationError::InvalidConfig("n must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(GenerationError::InvalidConfig("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpCompletion,
    HttpChat,
    Replay,
}

impl BackendKind {
    pub fn default_max_new_tokens(self) -> u32 {
        match self {
            BackendKind::HttpChat => DEFAULT_CHAT_MAX_NEW_TOKENS,
            _ => DEFAULT_MAX_NEW_TOKENS,
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "http_completion" | "completion" => Ok(BackendKind::HttpCompletion),
            "http_chat" | "chat" => Ok(BackendKind::HttpChat),
            "replay" => Ok(BackendKind::Replay),
            other => Err(GenerationError::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_backoff_ms: 500,
        }
    }
}

/// JSON field names used by an HTTP endpoint. `text_path` is a dotted path
/// inside each choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub model: String,
    pub prompt: String,
    pub messages: String,
    pub n: String,
    pub max_tokens: String,
    pub choices: String,
    pub text_path: Option<String>,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            model: "model".into(),
            prompt: "prompt".into(),
            messages: "messages".into(),
            n: "n".into(),
            max_tokens: "max_tokens".into(),
            choices: "choices".into(),
            text_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
    #[serde(default = "default_inflight")]
    pub max_inflight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_ms: u64,
    #[serde(default)]
    pub fields: FieldMapping,
}

fn default_inflight() -> usize {
    4
}

fn default_request_timeout() -> u64 {
    120_000
}

impl BackendConfig {
    pub fn replay(fixture_path: impl Into<PathBuf>) -> Self {
        BackendConfig {
            kind: BackendKind::Replay,
            endpoint_url: None,
            auth_env_var: None,
            fixture_path: Some(fixture_path.into()),
            max_inflight: default_inflight(),
            retry: RetryPolicy::default(),
            request_timeout_ms: default_request_timeout(),
            fields: FieldMapping::default(),
        }
    }

    pub fn http(kind: BackendKind, endpoint_url: impl Into<String>) -> Self {
        BackendConfig {
            kind,
            endpoint_url: Some(endpoint_url.into()),
            fixture_path: None,
            ..BackendConfig::replay("")
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        match self.kind {
            BackendKind::Replay if self.fixture_path.is_none() => Err(GenerationError::InvalidConfig(
                "replay backend needs a fixture path".into(),
            )),
            BackendKind::HttpChat | BackendKind::HttpCompletion if self.endpoint_url.is_none() => Err(
                GenerationError::InvalidConfig("http backend needs an endpoint url".into()),
            ),
            _ if self.max_inflight == 0 => {
                Err(GenerationError::InvalidConfig("max_inflight must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

pub trait GenerationBackend: Send + Sync {
    /// Returns completions in the order the backend produced them.
    fn complete(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError>;
}

/// Builds the backend described by `cfg`.
pub fn backend_from_config(cfg: &BackendConfig) -> Result<Box<dyn GenerationBackend>, GenerationError> {
    cfg.validate()?;
    match cfg.kind {
        BackendKind::Replay => {
            let path = cfg.fixture_path.as_deref().unwrap_or(Path::new(""));
            Ok(Box::new(ReplayBackend::load(path)?))
        }
        _ => Ok(Box::new(HttpBackend::new(cfg.clone())?)),
    }
}

/// Asks the backend for `req.n` completions and wraps them as an inventory
/// for `prompt`. Extra completions are ignored.
pub fn generate(
    prompt: &Prompt,
    req: &GenerationRequest,
    backend: &dyn GenerationBackend,
) -> Result<SuggestionInventory, GenerationError> {
    req.validate()?;
    let mut completions = backend.complete(req)?;
    if completions.len() < req.n {
        return Err(GenerationError::TruncatedResponse {
            expected: req.n,
            got: completions.len(),
        });
    }
    completions.truncate(req.n);
    Ok(SuggestionInventory::from_completions(prompt.clone(), completions))
}

/// Replay key: sha256 over the JSON array `[prompt, model, n]`.
pub fn fixture_key(prompt_text: &str, model_id: &str, n: usize) -> String {
    let canonical = json!([prompt_text, model_id, n]).to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub key: String,
    pub prompt: String,
    pub model: String,
    pub n: usize,
    pub completions: Vec<String>,
}

fn read_fixture(path: &Path) -> Result<Vec<FixtureRecord>, GenerationError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| GenerationError::MalformedFixture {
            line: idx + 1,
            reason,
        };
        let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if record.key != fixture_key(&record.prompt, &record.model, record.n) {
            return Err(malformed("key does not match (prompt, model, n)".into()));
        }
        records.push(record);
    }
    Ok(records)
}

/// Appends a replay record for `req`.
pub fn record_fixture(
    req: &GenerationRequest,
    completions: &[String],
    fixture_path: &Path,
) -> Result<(), GenerationError> {
    if completions.len() != req.n {
        return Err(GenerationError::CompletionCount {
            expected: req.n,
            got: completions.len(),
        });
    }
    let key = fixture_key(&req.prompt_text, &req.model_id, req.n);
    if fixture_path.exists() && read_fixture(fixture_path)?.iter().any(|r| r.key == key) {
        return Err(GenerationError::DuplicateKey(key));
    }
    let record = FixtureRecord {
        key,
        prompt: req.prompt_text.clone(),
        model: req.model_id.clone(),
        n: req.n,
        completions: completions.to_vec(),
    };
    let line = serde_json::to_string(&record).map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
    let mut file = OpenOptions::new().create(true).append(true).open(fixture_path)?;
    writeln!(file, "{line}")?;
    Ok(())
}

/// Serves recorded completions from a JSON-lines fixture.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    records: HashMap<String, Vec<String>>,
}

impl ReplayBackend {
    pub fn load(path: &Path) -> Result<Self, GenerationError> {
        let mut records = HashMap::new();
        for r in read_fixture(path)? {
            if records.insert(r.key.clone(), r.completions).is_some() {
                return Err(GenerationError::DuplicateKey(r.key));
            }
        }
        Ok(ReplayBackend { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl GenerationBackend for ReplayBackend {
    fn complete(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        let key = fixture_key(&req.prompt_text, &req.model_id, req.n);
        self.records
            .get(&key)
            .cloned()
            .ok_or(GenerationError::FixtureMiss(key))
    }
}

/// Client for completion- or chat-shaped JSON endpoints.
pub struct HttpBackend {
    cfg: BackendConfig,
    client: reqwest::blocking::Client,
    inflight: ProcessLimiter,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("cfg", &self.cfg).finish()
    }
}

enum Attempt {
    Done(Vec<String>),
    Transient(String),
}

impl HttpBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, GenerationError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| GenerationError::BackendUnavailable(e.to_string()))?;
        let inflight = ProcessLimiter::new(cfg.max_inflight);
        Ok(HttpBackend { cfg, client, inflight })
    }

    fn token(&self) -> Result<Option<String>, GenerationError> {
        match &self.cfg.auth_env_var {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .ok()
                .filter(|v| !v.is_empty())
                .map(Some)
                .ok_or_else(|| GenerationError::AuthMissing(var.clone())),
        }
    }

    fn body(&self, req: &GenerationRequest) -> Value {
        let f = &self.cfg.fields;
        let mut body = serde_json::Map::new();
        body.insert(f.model.clone(), json!(req.model_id));
        match self.cfg.kind {
            BackendKind::HttpChat => {
                body.insert(
                    f.messages.clone(),
                    json!([{"role": "user", "content": req.prompt_text}]),
                );
            }
            _ => {
                body.insert(f.prompt.clone(), json!(req.prompt_text));
            }
        }
        body.insert(f.n.clone(), json!(req.n));
        body.insert(f.max_tokens.clone(), json!(req.max_new_tokens));
        body.insert("temperature".into(), json!(req.temperature));
        body.insert("top_p".into(), json!(req.top_p));
        Value::Object(body)
    }

    fn parse_choices(&self, payload: &Value) -> Result<Vec<String>, GenerationError> {
        let bad = |why: &str| GenerationError::BackendUnavailable(format!("unexpected response: {why}"));
        let choices = payload
            .get(&self.cfg.fields.choices)
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing choices"))?;
        let default_path = match self.cfg.kind {
            BackendKind::HttpChat => "message.content",
            _ => "text",
        };
        let path = self.cfg.fields.text_path.as_deref().unwrap_or(default_path);
        let mut indexed = Vec::with_capacity(choices.len());
        for (i, choice) in choices.iter().enumerate() {
            let text = path
                .split('.')
                .try_fold(choice, |v, key| v.get(key))
                .and_then(Value::as_str)
                .ok_or_else(|| bad("choice without text"))?;
            let index = choice.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
            indexed.push((index, text.to_string()));
        }
        indexed.sort_by_key(|(i, _)| *i);
        Ok(indexed.into_iter().map(|(_, t)| t).collect())
    }

    fn attempt(&self, req: &GenerationRequest, token: Option<&str>) -> Result<Attempt, GenerationError> {
        let url = self.cfg.endpoint_url.as_deref().unwrap_or_default();
        let mut call = self.client.post(url).json(&self.body(req));
        if let Some(t) = token {
            call = call.bearer_auth(t);
        }
        let response = match call.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => return Ok(Attempt::Transient(e.to_string())),
            Err(e) => return Err(GenerationError::BackendUnavailable(e.to_string())),
        };
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Ok(Attempt::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(GenerationError::BackendUnavailable(format!("HTTP {status}")));
        }
        let payload: Value = match response.json() {
            Ok(v) => v,
            Err(e) if e.is_timeout() => return Ok(Attempt::Transient(e.to_string())),
            Err(e) => return Err(GenerationError::BackendUnavailable(e.to_string())),
        };
        Ok(Attempt::Done(self.parse_choices(&payload)?))
    }
}

impl GenerationBackend for HttpBackend {
    fn complete(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        let token = self.token()?;
        let _slot = self.inflight.acquire();
        let retry = self.cfg.retry;
        let mut last = String::new();
        for attempt in 0..=retry.max_retries {
            if attempt > 0 {
                let backoff = retry.base_backoff_ms.saturating_mul(1u64 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match self.attempt(req, token.as_deref())? {
                Attempt::Done(texts) => return Ok(texts),
                Attempt::Transient(why) => {
                    log::warn!("generation attempt {} failed: {why}", attempt + 1);
                    last = why;
                }
            }
        }
        Err(GenerationError::BackendUnavailable(format!(
            "gave up after {} attempts: {last}",
            retry.max_retries + 1
        )))
    }
}
