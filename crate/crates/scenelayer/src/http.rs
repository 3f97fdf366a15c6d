//! Remote embedding provider and chat client over a minimal JSON wire format.

use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use scenelayer_core::augment::{ChatClient, ChatRequest, ClientError};
use scenelayer_core::embedding::{Embedding, EmbeddingError, EmbeddingProvider};

pub const EMBED_ENDPOINT: &str = "EMBED_ENDPOINT";
pub const EMBED_MODEL: &str = "EMBED_MODEL";
pub const EMBED_API_KEY: &str = "EMBED_API_KEY";
pub const LLM_ENDPOINT: &str = "LLM_ENDPOINT";
pub const LLM_MODEL: &str = "LLM_MODEL";
pub const LLM_API_KEY: &str = "LLM_API_KEY";

pub const NETWORK_RETRIES: usize = 3;

/// Endpoint, model and key of one HTTP service.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub retries: usize,
    /// First retry delay; doubles each retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            retries: NETWORK_RETRIES,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads the three variables; `None` when the endpoint is unset.
    pub fn from_env(endpoint: &str, model: &str, key: &str) -> Option<Self> {
        let url = std::env::var(endpoint).ok().filter(|v| !v.is_empty())?;
        let mut cfg = HttpConfig::new(url, std::env::var(model).unwrap_or_default());
        cfg.api_key = std::env::var(key).ok().filter(|v| !v.is_empty());
        Some(cfg)
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into()
    }

    /// POSTs `body`, retrying transport errors, 429 and 5xx.
    fn post(&self, agent: &ureq::Agent, body: &Value) -> Result<String, String> {
        let payload = body.to_string();
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                thread::sleep(self.backoff * (1 << (attempt - 1)));
            }
            let mut req = agent
                .post(&self.endpoint)
                .header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            match req.send(payload.as_str()) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().map_err(|e| e.to_string());
                    match (status, text) {
                        (200..=299, Ok(text)) => return Ok(text),
                        (200..=299, Err(e)) => last = e,
                        (429 | 500..=599, _) => last = format!("HTTP {status}"),
                        (_, text) => {
                            return Err(format!(
                                "HTTP {status}: {}",
                                text.unwrap_or_default().chars().take(200).collect::<String>()
                            ))
                        }
                    }
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(format!(
            "{} unreachable after {} attempt(s): {last}",
            self.endpoint,
            self.retries + 1
        ))
    }
}

#[derive(Deserialize)]
struct VectorsReply {
    vectors: Vec<Vec<f64>>,
}

/// Provider speaking `{"model","input"}` → `{"vectors"}`.
pub struct RemoteEmbeddingProvider {
    config: HttpConfig,
    agent: ureq::Agent,
    id: String,
    dim: OnceLock<usize>,
}

impl RemoteEmbeddingProvider {
    pub fn new(config: HttpConfig) -> Self {
        let id = if config.model.is_empty() {
            format!("remote:{}", config.endpoint)
        } else {
            format!("remote:{}", config.model)
        };
        RemoteEmbeddingProvider {
            agent: config.agent(),
            config,
            id,
            dim: OnceLock::new(),
        }
    }

    pub fn from_env() -> Option<Self> {
        HttpConfig::from_env(EMBED_ENDPOINT, EMBED_MODEL, EMBED_API_KEY).map(Self::new)
    }
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn id(&self) -> &str {
        &self.id
    }

    /// Known after the first successful request; 0 before.
    fn dim(&self) -> usize {
        self.dim.get().copied().unwrap_or(0)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let body = json!({"model": self.config.model, "input": texts});
        let text = self
            .config
            .post(&self.agent, &body)
            .map_err(EmbeddingError::ProviderUnavailable)?;
        let reply: VectorsReply = serde_json::from_str(&text)
            .map_err(|e| EmbeddingError::ProviderUnavailable(format!("bad embedding reply: {e}")))?;
        if reply.vectors.len() != texts.len() {
            return Err(EmbeddingError::ProviderUnavailable(format!(
                "embedding reply has {} vectors for {} inputs",
                reply.vectors.len(),
                texts.len()
            )));
        }
        let rows = reply
            .vectors
            .into_iter()
            .map(|v| Embedding::new(v, self.id.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            let dim = *self.dim.get_or_init(|| first.dim());
            if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
                return Err(EmbeddingError::DimensionMismatch {
                    left: dim,
                    right: bad.dim(),
                });
            }
        }
        Ok(rows)
    }
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

/// Chat client speaking `{"model","system","user","temperature","response_schema"?}`
/// → `{"text"}`.
pub struct HttpChatClient {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(config: HttpConfig) -> Self {
        HttpChatClient {
            agent: config.agent(),
            config,
        }
    }

    pub fn from_env() -> Option<Self> {
        HttpConfig::from_env(LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY).map(Self::new)
    }
}

impl ChatClient for HttpChatClient {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn supports_schema_enforcement(&self) -> bool {
        true
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let mut body = json!({
            "model": self.config.model,
            "system": request.system,
            "user": request.user,
            "temperature": request.temperature,
        });
        if let Some(schema) = &request.response_schema {
            body["response_schema"] = schema.clone();
        }
        let text = self
            .config
            .post(&self.agent, &body)
            .map_err(ClientError::ClientUnavailable)?;
        serde_json::from_str::<TextReply>(&text)
            .map(|r| r.text)
            .map_err(|e| ClientError::ClientUnavailable(format!("bad chat reply: {e}")))
    }
}
