//! Live backend speaking the OpenAI-compatible chat-completions protocol.
//!
//! Every call POSTs `{base_url}/chat/completions` with a `tools` array
//! holding exactly the requested function and a `tool_choice` forcing it.
//! Transient transport failures (connection errors, timeouts, 429, 5xx)
//! are retried with exponential backoff; a malformed tool-call payload is
//! re-requested once, then surfaces as a parse error.

use std::time::Duration;

use serde_json::{json, Value};

use super::{Backend, FunctionKind, LlmCall, LlmError, LlmResult};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    /// Transient-failure retries after the first attempt.
    pub max_retries: u32,
    /// Base backoff; doubles per retry.
    pub backoff_ms: u64,
}

impl HttpConfig {
    pub fn new(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
    ) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: api_key.into(),
            model: model.into(),
            max_retries: 3,
            backoff_ms: 500,
        }
    }

    /// Read `LWM_API_KEY` (required), `LWM_BASE_URL` (default the OpenAI
    /// endpoint), and `LWM_MODEL` (default `gpt-4o`).
    pub fn from_env() -> Result<Self, LlmError> {
        let api_key = std::env::var("LWM_API_KEY")
            .map_err(|_| LlmError::InvalidArgument("LWM_API_KEY is not set".into()))?;
        let base_url = std::env::var("LWM_BASE_URL")
            .unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
        let model = std::env::var("LWM_MODEL").unwrap_or_else(|_| "gpt-4o".to_string());
        Ok(Self::new(base_url, api_key, model))
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| LlmError::Backend(format!("cannot build HTTP client: {e}")))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn request_body(&self, call: &LlmCall) -> Value {
        let name = call.function.name();
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": call.system},
                {"role": "user", "content": call.user},
            ],
            "tools": [{
                "type": "function",
                "function": {
                    "name": name,
                    "description": function_description(call.function),
                    "parameters": call.function.parameters_schema(),
                },
            }],
            "tool_choice": {"type": "function", "function": {"name": name}},
            "temperature": call.temperature,
            "max_tokens": call.max_tokens,
        })
    }

    /// One POST; distinguishes transient failures (worth retrying) from
    /// fatal ones.
    fn send(&self, body: &Value) -> Result<String, SendError> {
        let response = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send()
            .map_err(|e| SendError::Transient(format!("transport failure: {e}")))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| SendError::Transient(format!("cannot read response body: {e}")))?;
        if status.is_success() {
            return Ok(text);
        }
        let excerpt: String = text.chars().take(300).collect();
        let message = format!("HTTP {status}: {excerpt}");
        if status.as_u16() == 429 || status.is_server_error() {
            Err(SendError::Transient(message))
        } else {
            Err(SendError::Fatal(message))
        }
    }
}

enum SendError {
    Transient(String),
    Fatal(String),
}

/// Extract and validate the forced tool call from a response body.
fn parse_response(function: FunctionKind, body: &str) -> Result<LlmResult, LlmError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| LlmError::Parse(format!("response is not JSON: {e}")))?;
    let tool_call = value
        .pointer("/choices/0/message/tool_calls/0/function")
        .ok_or_else(|| LlmError::Parse("response carries no tool call".into()))?;
    let name = tool_call
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Parse("tool call lacks a function name".into()))?;
    if name != function.name() {
        return Err(LlmError::Parse(format!(
            "model called {name:?} instead of {:?}",
            function.name()
        )));
    }
    let arguments = tool_call
        .get("arguments")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Parse("tool call lacks arguments".into()))?;
    let arguments: Value = serde_json::from_str(arguments)
        .map_err(|e| LlmError::Parse(format!("arguments are not JSON: {e}")))?;
    LlmResult::from_arguments(function, &arguments)
}

fn function_description(function: FunctionKind) -> &'static str {
    match function {
        FunctionKind::ProposeActions => "Propose the most promising next actions to evaluate.",
        FunctionKind::SimulateStep => {
            "Predict the next observation, immediate reward, and done flag for the given action."
        }
        FunctionKind::EstimateValue => {
            "Estimate the cumulative future reward from the current observation."
        }
        FunctionKind::FactExtraction => {
            "Extract new atomic facts about the environment from the completed episode."
        }
        FunctionKind::FactRedundancyRemover => {
            "Remove redundant facts from the list, keeping all distinct knowledge."
        }
        FunctionKind::ReactStep => "Choose exactly one action to take next.",
        FunctionKind::Reflect => "Produce one concise lesson from the completed episode.",
    }
}

impl Backend for HttpBackend {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let body = self.request_body(call);
        let mut transport_failures = 0u32;
        let mut parse_failures = 0u32;
        loop {
            match self.send(&body) {
                Ok(text) => match parse_response(call.function, &text) {
                    Ok(result) => return Ok(result),
                    Err(e) => {
                        parse_failures += 1;
                        if parse_failures > 1 {
                            return Err(e);
                        }
                        log::warn!("malformed tool-call payload, re-requesting once: {e}");
                    }
                },
                Err(SendError::Fatal(message)) => return Err(LlmError::Backend(message)),
                Err(SendError::Transient(message)) => {
                    transport_failures += 1;
                    if transport_failures > self.config.max_retries {
                        return Err(LlmError::Backend(message));
                    }
                    let wait = self.config.backoff_ms << (transport_failures - 1);
                    log::warn!("transient failure ({message}), retrying in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                }
            }
        }
    }

    fn label(&self) -> String {
        format!("http:{}", self.config.model)
    }
}
