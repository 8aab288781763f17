//! Remote generator adapter: one HTTP POST per call with a bounded retry
//! loop. The wire format is vendor-neutral; vendor-specific APIs sit behind
//! proxies that speak it.
//!
//! Request:  `{"prompt": {"system": "...", "user": "..."},
//!             "params": {"temperature": t, "max_tokens": n}}`
//! Response: `{"text": "..."}`

use std::time::Duration;

use serde::Deserialize;

use super::{BridgeError, PromptBundle};

pub const ENV_URL: &str = "LATTICE_LLM_URL";
pub const ENV_TOKEN: &str = "LATTICE_LLM_TOKEN";
pub const ENV_TIMEOUT_MS: &str = "LATTICE_LLM_TIMEOUT_MS";
pub const ENV_MAX_RETRIES: &str = "LATTICE_LLM_MAX_RETRIES";

const DEFAULT_TIMEOUT_MS: u64 = 30_000;
const DEFAULT_MAX_RETRIES: u32 = 2;

pub struct RemoteGenerator {
    url: String,
    token: Option<String>,
    timeout: Duration,
    max_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

impl RemoteGenerator {
    pub fn new(
        url: impl Into<String>,
        token: Option<String>,
        timeout_ms: u64,
        max_retries: u32,
    ) -> Result<RemoteGenerator, BridgeError> {
        let url = url.into();
        if url.is_empty() {
            return Err(BridgeError::MissingEndpoint("empty endpoint URL".into()));
        }
        let timeout = Duration::from_millis(timeout_ms);
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BridgeError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(RemoteGenerator {
            url,
            token,
            timeout,
            max_retries,
            temperature: 0.7,
            max_tokens: 2048,
            client,
        })
    }

    /// Configuration from the environment; `LATTICE_LLM_URL` is required.
    pub fn from_env() -> Result<RemoteGenerator, BridgeError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| BridgeError::MissingEndpoint(format!("{ENV_URL} is not set")))?;
        let token = std::env::var(ENV_TOKEN).ok();
        let timeout_ms = std::env::var(ENV_TIMEOUT_MS)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_TIMEOUT_MS);
        let max_retries = std::env::var(ENV_MAX_RETRIES)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_MAX_RETRIES);
        Self::new(url, token, timeout_ms, max_retries)
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// At most `1 + max_retries` attempts; timeouts, transport failures, and
    /// 5xx statuses retry, anything else returns immediately.
    pub fn generate(&self, bundle: &PromptBundle) -> Result<String, BridgeError> {
        let body = serde_json::json!({
            "prompt": {
                "system": bundle.system_prompt,
                "user": bundle.user_instruction,
            },
            "params": {
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            },
        });
        let attempts_allowed = 1 + self.max_retries;
        let mut last_error = BridgeError::Transport {
            attempts: 0,
            detail: "no attempt made".into(),
        };
        for attempt in 1..=attempts_allowed {
            let mut request = self.client.post(&self.url).json(&body);
            if let Some(token) = &self.token {
                request = request.bearer_auth(token);
            }
            match request.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let wire: WireResponse =
                            resp.json().map_err(|e| BridgeError::Backend {
                                status: status.as_u16(),
                                excerpt: format!("malformed response body: {e}"),
                            })?;
                        return Ok(wire.text);
                    }
                    let excerpt: String = resp
                        .text()
                        .unwrap_or_default()
                        .chars()
                        .take(200)
                        .collect();
                    let err = BridgeError::Backend {
                        status: status.as_u16(),
                        excerpt,
                    };
                    if status.is_server_error() && attempt < attempts_allowed {
                        last_error = err;
                        continue;
                    }
                    return Err(err);
                }
                Err(e) if e.is_timeout() => {
                    last_error = BridgeError::Timeout { attempts: attempt };
                }
                Err(e) => {
                    last_error = BridgeError::Transport {
                        attempts: attempt,
                        detail: e.to_string(),
                    };
                }
            }
        }
        Err(last_error)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{PromptBundle, PromptTask};
    use super::*;

    fn bundle() -> PromptBundle {
        PromptBundle {
            task: PromptTask::Layout,
            template_version: "v1".into(),
            system_prompt: "s".into(),
            user_instruction: "u".into(),
            attachments: None,
        }
    }

    #[test]
    fn unreachable_endpoint_reports_transport_after_retries() {
        // Port 1 refuses connections immediately; no network leaves the host.
        let generator =
            RemoteGenerator::new("http://127.0.0.1:1/generate", None, 2_000, 2).unwrap();
        match generator.generate(&bundle()) {
            Err(BridgeError::Transport { attempts: 3, .. }) => {}
            Err(BridgeError::Timeout { attempts: 3 }) => {}
            other => panic!(
                "expected transport failure after 3 attempts, got {:?}",
                other.map(|_| ())
            ),
        }
    }

    #[test]
    fn missing_url_is_a_config_error() {
        // from_env is exercised without touching the process environment.
        match RemoteGenerator::new("", None, 1_000, 0) {
            Err(BridgeError::MissingEndpoint(_)) => {}
            other => panic!("expected MissingEndpoint, got {:?}", other.map(|_| ())),
        }
    }
}
