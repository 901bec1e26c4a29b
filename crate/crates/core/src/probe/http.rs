//! OpenAI-compatible chat-completion and embedding client.

use std::sync::OnceLock;
use std::time::Duration;

use serde_json::{json, Value};

use super::client::{CompletionRequest, LlmClient};
use super::provider::ProviderConfig;
use crate::error::{Error, Result};

pub struct HttpLlmClient {
    cfg: ProviderConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    dim: OnceLock<usize>,
}

impl HttpLlmClient {
    /// Reads the credential from `cfg.api_key_env`; a missing variable is
    /// allowed for endpoints that need no key.
    pub fn from_env(cfg: ProviderConfig) -> Result<Self> {
        let api_key = std::env::var(&cfg.api_key_env).ok();
        Self::new(cfg, api_key)
    }

    pub fn new(cfg: ProviderConfig, api_key: Option<String>) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpLlmClient {
            cfg,
            api_key,
            http,
            dim: OnceLock::new(),
        })
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let url = format!("{}/{path}", self.cfg.endpoint.trim_end_matches('/'));
        let mut req = self.http.post(&url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Transport(format!("{url}: HTTP {status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| Error::Transport(format!("{url}: {e}")))
    }
}

impl LlmClient for HttpLlmClient {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String> {
        let body = json!({
            "model": self.cfg.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.cfg.temperature,
        });
        let resp = self.post("chat/completions", &body)?;
        resp.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| Error::Transport("response has no choices[0].message.content".into()))
    }

    /// Zero until the first embedding has been fetched.
    fn embedding_dim(&self) -> usize {
        self.dim.get().copied().unwrap_or(0)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let body = json!({"model": self.cfg.embedding_model, "input": text});
        let resp = self.post("embeddings", &body)?;
        let v: Vec<f64> = resp
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Transport("response has no data[0].embedding".into()))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| Error::Transport("non-numeric embedding".into()))
            })
            .collect::<Result<_>>()?;
        let dim = *self.dim.get_or_init(|| v.len());
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: v.len(),
            });
        }
        Ok(v)
    }
}
