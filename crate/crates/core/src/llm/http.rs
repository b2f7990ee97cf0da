//! Chat-completions client over HTTP.
//!
//! Request body:
//! `{"model":..,"messages":[{"role":"system",..},{"role":"user",..}],"max_tokens":..,"temperature":..,"top_p":..,"repetition_penalty":..}`.
//! The reply text is `choices[0].message.content`.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendError, ChatPrompt, DecodingParams};

const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    /// Server root, e.g. `http://localhost:8000`.
    pub base_url: String,
    pub path: String,
    pub model: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first on transient failures.
    pub retries: u32,
    /// First backoff delay; doubles on each retry.
    pub backoff_ms: u64,
    /// Environment variable holding a bearer token, if any.
    pub auth_env: String,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000".into(),
            path: "/v1/chat/completions".into(),
            model: "robot-command-llm".into(),
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 250,
            auth_env: "ROBOCMD_API_KEY".into(),
            max_in_flight: 4,
        }
    }
}

impl HttpConfig {
    pub fn url(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), self.path)
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("config", &self.config).finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let token = std::env::var(&config.auth_env).ok().filter(|t| !t.is_empty());
        Ok(HttpBackend {
            config,
            client,
            token,
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn request_body(&self, prompt: &ChatPrompt, params: &DecodingParams) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "max_tokens": params.max_new_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "repetition_penalty": params.repetition_penalty,
        })
    }

    fn acquire(&self) {
        let cap = self.config.max_in_flight.max(1);
        let mut n = self.in_flight.lock().expect("in-flight counter poisoned");
        while *n >= cap {
            n = self.slot_freed.wait(n).expect("in-flight counter poisoned");
        }
        *n += 1;
    }

    fn release(&self) {
        *self.in_flight.lock().expect("in-flight counter poisoned") -= 1;
        self.slot_freed.notify_one();
    }

    fn attempt(&self, body: &Value) -> Result<String, BackendError> {
        let mut req = self.client.post(self.config.url()).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(classify)?;
        let status = resp.status();
        let text = resp.text().map_err(classify)?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: text.chars().take(BODY_EXCERPT).collect(),
            });
        }
        extract_content(&text)
    }
}

fn classify(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else {
        BackendError::Transport(e.to_string())
    }
}

fn is_transient(e: &BackendError) -> bool {
    match e {
        BackendError::Transport(_) | BackendError::Timeout => true,
        BackendError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

fn extract_content(body: &str) -> Result<String, BackendError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| BackendError::MalformedResponse(format!("response is not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0].message.content".into()))
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &ChatPrompt, params: &DecodingParams) -> Result<String, BackendError> {
        let body = self.request_body(prompt, params);
        self.acquire();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        let result = loop {
            match self.attempt(&body) {
                Err(e) if is_transient(&e) && attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                other => break other,
            }
        };
        self.release();
        result
    }

    fn supports_concurrency(&self) -> bool {
        true
    }
}
