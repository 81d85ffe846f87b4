//! Reasoning backends: the replay backend for tests and a generic
//! chat-completion HTTP backend for real runs.

use std::collections::VecDeque;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub reasoning_trace: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend request failed: {0}")]
    Http(String),
    #[error("backend response malformed: {0}")]
    Malformed(String),
    #[error("replay script has no reply for this prompt")]
    ScriptExhausted,
}

pub trait ReasoningBackend: Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &str, params: &CompletionParams)
        -> Result<Completion, BackendError>;
}

enum ReplayScript {
    Sequence(Mutex<VecDeque<String>>),
    /// First rule whose needles all appear in the prompt wins.
    Keyed(Vec<(Vec<String>, String)>),
}

/// Deterministic test backend that replays configured responses.
pub struct ReplayBackend {
    script: ReplayScript,
}

impl ReplayBackend {
    pub fn sequence<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ReplayBackend {
            script: ReplayScript::Sequence(Mutex::new(
                responses.into_iter().map(Into::into).collect(),
            )),
        }
    }

    pub fn keyed<I, N, NS, S>(rules: I) -> Self
    where
        I: IntoIterator<Item = (N, S)>,
        N: IntoIterator<Item = NS>,
        NS: Into<String>,
        S: Into<String>,
    {
        ReplayBackend {
            script: ReplayScript::Keyed(
                rules
                    .into_iter()
                    .map(|(needles, response)| {
                        (
                            needles.into_iter().map(Into::into).collect(),
                            response.into(),
                        )
                    })
                    .collect(),
            ),
        }
    }
}

impl ReasoningBackend for ReplayBackend {
    fn id(&self) -> String {
        "replay".to_string()
    }

    fn complete(
        &self,
        prompt: &str,
        _params: &CompletionParams,
    ) -> Result<Completion, BackendError> {
        let text = match &self.script {
            ReplayScript::Sequence(queue) => queue
                .lock()
                .unwrap()
                .pop_front()
                .ok_or(BackendError::ScriptExhausted)?,
            ReplayScript::Keyed(rules) => rules
                .iter()
                .find(|(needles, _)| needles.iter().all(|n| prompt.contains(n.as_str())))
                .map(|(_, response)| response.clone())
                .ok_or(BackendError::ScriptExhausted)?,
        };
        Ok(Completion {
            text,
            reasoning_trace: String::new(),
        })
    }
}

/// Generic chat-completion endpoint: URL, model, and an optional bearer
/// token, with no assumptions about the vendor behind it.
#[derive(Debug)]
pub struct HttpBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

pub const BACKEND_URL_VAR: &str = "JOULINT_BACKEND_URL";
pub const BACKEND_MODEL_VAR: &str = "JOULINT_MODEL";
pub const BACKEND_KEY_VAR: &str = "JOULINT_API_KEY";

impl HttpBackend {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(300))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(HttpBackend {
            url: url.into(),
            model: model.into(),
            api_key,
            client,
        })
    }

    /// Endpoint and model from the environment; the credential stays out of
    /// config files.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(BACKEND_URL_VAR)
            .map_err(|_| BackendError::Unavailable(format!("{BACKEND_URL_VAR} is not set")))?;
        let model = std::env::var(BACKEND_MODEL_VAR)
            .map_err(|_| BackendError::Unavailable(format!("{BACKEND_MODEL_VAR} is not set")))?;
        let api_key = std::env::var(BACKEND_KEY_VAR).ok();
        HttpBackend::new(url, model, api_key)
    }
}

impl ReasoningBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn complete(
        &self,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<Completion, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut request = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| BackendError::Http(e.to_string()))?;
        let status = response.status();
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http(format!("status {status}: {payload}")));
        }
        let message = &payload["choices"][0]["message"];
        let text = message["content"]
            .as_str()
            .ok_or_else(|| {
                BackendError::Malformed("no choices[0].message.content".to_string())
            })?
            .to_string();
        let reasoning_trace = message["reasoning"]
            .as_str()
            .unwrap_or_default()
            .to_string();
        Ok(Completion {
            text,
            reasoning_trace,
        })
    }
}
