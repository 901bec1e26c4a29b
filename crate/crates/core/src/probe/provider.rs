use serde::{Deserialize, Serialize};

/// Settings for an OpenAI-compatible completion and embedding endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model_id: String,
    pub embedding_model: String,
    /// Name of the environment variable holding the API credential.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1".into(),
            model_id: "gpt-3.5-turbo-0613".into(),
            embedding_model: "text-embedding-ada-002".into(),
            api_key_env: "SUMDISTILL_API_KEY".into(),
            temperature: 1.0,
            timeout_secs: 120,
        }
    }
}
