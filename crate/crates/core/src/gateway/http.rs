//! OpenAI-compatible chat-completion backend over HTTP.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, BackendError, BackendErrorKind, GatewayError};
use crate::prompts::PromptSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpBackendConfig {
    /// Base URL up to the API root, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Omitted from the request when `None` so the server default applies.
    pub temperature: Option<f64>,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            temperature: None,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<HttpBackend, GatewayError> {
        let api_key = std::env::var(&config.api_key_env).ok();
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend {
            config,
            api_key,
            client,
        })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl Backend for HttpBackend {
    fn complete(&self, spec: &PromptSpec) -> Result<String, BackendError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": spec.rendered_text}],
        });
        if let Some(temperature) = self.config.temperature {
            body["temperature"] = json!(temperature);
        }
        let mut request = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| BackendError {
            kind: BackendErrorKind::Transient,
            message: format!("request failed: {e}"),
            status: None,
        })?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError {
                kind: BackendErrorKind::Auth,
                message: format!("HTTP {status} (check ${})", self.config.api_key_env),
                status: Some(status.as_u16()),
            });
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::transient(
                format!("HTTP {status}"),
                Some(status.as_u16()),
            ));
        }
        if !status.is_success() {
            return Err(BackendError::fatal(
                format!("HTTP {status}"),
                Some(status.as_u16()),
            ));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| BackendError::fatal(format!("bad response body: {e}"), None))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|choice| choice.message.content)
            .ok_or_else(|| BackendError::fatal("response had no choices", None))
    }

    fn tag(&self) -> String {
        format!("openai:{}", self.config.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ItemCatalog;
    use crate::gateway::{collect, format_reply, CollectConfig, SyntheticRespondent, SyntheticRespondentConfig};
    use crate::lexi::Lexicon;
    use crate::prompts::PromptFactory;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal scripted HTTP/1.1 server: each connection gets the next
    /// canned (status, body) response.
    fn serve_scripted(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<usize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let served = Arc::new(AtomicUsize::new(0));
        let served_in_thread = served.clone();
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let trimmed = line.trim();
                    if trimmed.is_empty() {
                        break;
                    }
                    if let Some(value) = trimmed
                        .to_ascii_lowercase()
                        .strip_prefix("content-length:")
                    {
                        content_length = value.trim().parse().unwrap_or(0);
                    }
                }
                let mut payload = vec![0u8; content_length];
                reader.read_exact(&mut payload).unwrap();
                let reason = match status {
                    200 => "OK",
                    429 => "Too Many Requests",
                    401 => "Unauthorized",
                    _ => "Error",
                };
                let reply = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
                served_in_thread.fetch_add(1, Ordering::SeqCst);
            }
            served_in_thread.load(Ordering::SeqCst)
        });
        (format!("http://{addr}"), handle)
    }

    fn chat_body(content: &str) -> String {
        serde_json::to_string(&serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        }))
        .unwrap()
    }

    fn one_spec() -> crate::prompts::PromptSpec {
        PromptFactory::with_defaults(ItemCatalog::bundled())
            .grid(1)
            .unwrap()
            .remove(0)
    }

    fn canned_reply() -> String {
        let respondent = SyntheticRespondent::new(
            SyntheticRespondentConfig::default().with_seed(3),
            Lexicon::bundled(),
            ItemCatalog::bundled(),
        );
        format_reply(&respondent.respond(&one_spec()))
    }

    #[test]
    fn collects_through_a_chat_completions_endpoint() {
        let (base, handle) = serve_scripted(vec![(200, chat_body(&canned_reply()))]);
        let backend = HttpBackend::new(HttpBackendConfig {
            base_url: base,
            model: "test-model".into(),
            temperature: Some(0.7),
            api_key_env: "DASSLAB_TEST_KEY_UNSET".into(),
            timeout_secs: 10,
        })
        .unwrap();
        let report = collect(
            &[one_spec()],
            &backend,
            &CollectConfig {
                base_delay_ms: 0,
                max_delay_ms: 0,
                concurrency: 1,
                ..CollectConfig::default()
            },
        )
        .unwrap();
        assert_eq!(report.records().count(), 1);
        let record = report.records().next().unwrap();
        assert_eq!(record.backend_tag, "openai:test-model");
        assert_eq!(handle.join().unwrap(), 1);
    }

    #[test]
    fn rate_limit_then_success_is_retried() {
        let (base, handle) = serve_scripted(vec![
            (429, "{\"error\": \"slow down\"}".into()),
            (429, "{\"error\": \"slow down\"}".into()),
            (200, chat_body(&canned_reply())),
        ]);
        let backend = HttpBackend::new(HttpBackendConfig {
            base_url: base,
            model: "test-model".into(),
            temperature: None,
            api_key_env: "DASSLAB_TEST_KEY_UNSET".into(),
            timeout_secs: 10,
        })
        .unwrap();
        let report = collect(
            &[one_spec()],
            &backend,
            &CollectConfig {
                base_delay_ms: 0,
                max_delay_ms: 0,
                concurrency: 1,
                ..CollectConfig::default()
            },
        )
        .unwrap();
        assert_eq!(report.records().count(), 1);
        assert_eq!(report.retries.len(), 2);
        assert_eq!(handle.join().unwrap(), 3);
    }

    #[test]
    fn unauthorized_maps_to_auth_error() {
        let (base, _handle) = serve_scripted(vec![(401, "{}".into())]);
        let backend = HttpBackend::new(HttpBackendConfig {
            base_url: base,
            model: "test-model".into(),
            temperature: None,
            api_key_env: "DASSLAB_TEST_KEY_UNSET".into(),
            timeout_secs: 10,
        })
        .unwrap();
        let error = backend.complete(&one_spec()).unwrap_err();
        assert_eq!(error.kind, BackendErrorKind::Auth);
    }
}
