//! Live HTTP backend speaking the OpenAI-compatible chat-completions and
//! embeddings protocol. Credentials come from an environment variable named
//! in the config; transient failures are retried with exponential backoff.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, GatewayError, PromptRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub embedding_model: String,
    /// Name of the environment variable holding the API key. The key
    /// itself never appears in configs, records, or errors.
    pub api_key_env: String,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for LiveConfig {
    fn default() -> LiveConfig {
        LiveConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model: "gpt-4o-mini".to_string(),
            embedding_model: "text-embedding-3-small".to_string(),
            api_key_env: "UOT_API_KEY".to_string(),
            max_retries: 3,
            initial_backoff_ms: 1000,
            timeout_secs: 60,
        }
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    id: String,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<LiveBackend, GatewayError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::BackendFailure {
                backend: "live".to_string(),
                attempts: 0,
                reason: e.to_string(),
            })?;
        let id = format!("live-{}-{}", config.model, config.embedding_model);
        Ok(LiveBackend {
            config,
            api_key,
            client,
            id,
        })
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<serde_json::Value, GatewayError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let attempts = self.config.max_retries + 1;
        let mut last_reason = String::new();
        for attempt in 1..=attempts {
            let sent = self
                .client
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(body)
                .send();
            match sent {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        return response.json().map_err(|e| {
                            GatewayError::MalformedResponse(format!("invalid JSON body: {e}"))
                        });
                    }
                    let retriable = status.as_u16() == 429 || status.is_server_error();
                    let body = response.text().unwrap_or_default();
                    last_reason = format!("HTTP {status}: {}", super::truncate(&body, 200));
                    if !retriable {
                        return Err(GatewayError::BackendFailure {
                            backend: self.id.clone(),
                            attempts: attempt,
                            reason: last_reason,
                        });
                    }
                }
                Err(e) => last_reason = format!("transport error: {e}"),
            }
            if attempt < attempts {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(GatewayError::BackendFailure {
            backend: self.id.clone(),
            attempts,
            reason: last_reason,
        })
    }
}

impl Backend for LiveBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.render()}],
            "temperature": request.sampling.temperature,
            "max_tokens": request.sampling.max_output_tokens,
        });
        let reply = self.post("chat/completions", &body)?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| {
                GatewayError::MalformedResponse(
                    "chat completion response had no choices[0].message.content".into(),
                )
            })
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let body = json!({
            "model": self.config.embedding_model,
            "input": text,
        });
        let reply = self.post("embeddings", &body)?;
        let values = reply["data"][0]["embedding"].as_array().ok_or_else(|| {
            GatewayError::MalformedResponse("embedding response had no data[0].embedding".into())
        })?;
        values
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    GatewayError::MalformedResponse("embedding contained a non-numeric entry".into())
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_api_key_is_reported_by_env_var_name() {
        let config = LiveConfig {
            api_key_env: "UOT_TEST_KEY_THAT_DOES_NOT_EXIST".to_string(),
            ..LiveConfig::default()
        };
        match LiveBackend::new(config) {
            Err(GatewayError::MissingApiKey(name)) => {
                assert_eq!(name, "UOT_TEST_KEY_THAT_DOES_NOT_EXIST")
            }
            Err(other) => panic!("expected MissingApiKey, got {other}"),
            Ok(_) => panic!("expected MissingApiKey, got a backend"),
        }
    }

    #[test]
    fn config_defaults_are_sane() {
        let config = LiveConfig::default();
        assert_eq!(config.max_retries, 3);
        assert_eq!(config.initial_backoff_ms, 1000);
        let json = serde_json::to_string(&config).unwrap();
        let back: LiveConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
    }
}
