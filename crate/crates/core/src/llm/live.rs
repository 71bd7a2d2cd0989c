use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError, TokenUsage};

pub const DEFAULT_API_KEY_ENV: &str = "ARGGRAPH_API_KEY";

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub url: String,
    pub api_key: Option<String>,
    /// Environment variable that overrides `api_key` when set.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "https://api.openai.com/v1".into(),
            api_key: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 120,
            max_attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

impl EndpointConfig {
    pub fn resolve_api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .or_else(|| self.api_key.clone().filter(|k| !k.trim().is_empty()))
    }

    fn completions_url(&self) -> String {
        let base = self.url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Blocking HTTP backend with bounded exponential-backoff retries on
/// transport failures, 429 and 5xx responses.
pub struct LiveBackend {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    max_attempts: u32,
    initial_backoff: Duration,
}

enum Attempt {
    Done(ChatResponse),
    Retry(LlmError),
    Fail(LlmError),
}

impl LiveBackend {
    pub fn new(config: &EndpointConfig) -> Result<Self, LlmError> {
        let api_key =
            config.resolve_api_key().ok_or_else(|| LlmError::MissingCredential(config.api_key_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveBackend {
            agent,
            url: config.completions_url(),
            api_key,
            max_attempts: config.max_attempts.max(1),
            initial_backoff: Duration::from_millis(config.initial_backoff_ms),
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let result =
            self.agent.post(&self.url).header("Authorization", &format!("Bearer {}", self.api_key)).send_json(body);
        let mut response = match result {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(LlmError::TransportFailure { attempts: 0, message: e.to_string() }),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(LlmError::TransportFailure { attempts: 0, message: e.to_string() }),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(LlmError::ProviderError { status, body: text });
        }
        if !(200..300).contains(&status) {
            return Attempt::Fail(LlmError::ProviderError { status, body: text });
        }
        match parse_completion(&text) {
            Ok(r) => Attempt::Done(r),
            Err(e) => Attempt::Fail(e),
        }
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut body = json!({
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_completion_tokens": request.max_output_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }

        let mut last = None;
        for attempt in 1..=self.max_attempts {
            match self.attempt(&body) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
            if attempt < self.max_attempts {
                std::thread::sleep(self.initial_backoff * 2u32.pow(attempt - 1));
            }
        }
        Err(match last {
            Some(LlmError::TransportFailure { message, .. }) => {
                LlmError::TransportFailure { attempts: self.max_attempts, message }
            }
            Some(other) => other,
            None => unreachable!("at least one attempt is made"),
        })
    }
}

fn parse_completion(body: &str) -> Result<ChatResponse, LlmError> {
    let value: Value = serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let text = value["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?
        .to_owned();
    let usage = &value["usage"];
    let token_usage = match (usage["prompt_tokens"].as_u64(), usage["completion_tokens"].as_u64()) {
        (Some(prompt_tokens), Some(completion_tokens)) => Some(TokenUsage { prompt_tokens, completion_tokens }),
        _ => None,
    };
    Ok(ChatResponse { text, token_usage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves one canned `(status, body)` per connection and records request bodies.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1"), seen)
    }

    fn config(url: String) -> EndpointConfig {
        EndpointConfig {
            url,
            api_key: Some("test-key".into()),
            api_key_env: "ARGGRAPH_TEST_UNSET_KEY".into(),
            timeout_secs: 5,
            max_attempts: 3,
            initial_backoff_ms: 1,
        }
    }

    fn request() -> ChatRequest {
        ChatRequest {
            system_prompt: "sys".into(),
            user_prompt: "user".into(),
            model_name: "test-model".into(),
            temperature: 0.0,
            seed: Some(42),
            max_output_tokens: 64,
        }
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"1. A"}}],"usage":{"prompt_tokens":10,"completion_tokens":3}}"#;

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, seen) = serve(vec![(500, "{}".into()), (503, "{}".into()), (200, OK.into())]);
        let backend = LiveBackend::new(&config(url)).unwrap();
        let response = backend.complete(&request()).unwrap();
        assert_eq!(response.text, "1. A");
        assert_eq!(response.token_usage, Some(TokenUsage { prompt_tokens: 10, completion_tokens: 3 }));
        let bodies = seen.lock().unwrap();
        assert_eq!(bodies.len(), 3);
        let sent: Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["seed"], 42);
        assert_eq!(sent["messages"][1]["content"], "user");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, seen) = serve(vec![(400, r#"{"error":"bad"}"#.into())]);
        let backend = LiveBackend::new(&config(url)).unwrap();
        match backend.complete(&request()) {
            Err(LlmError::ProviderError { status, body }) => {
                assert_eq!(status, 400);
                assert!(body.contains("bad"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_failure() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let backend = LiveBackend::new(&config(format!("http://{addr}"))).unwrap();
        assert!(matches!(backend.complete(&request()), Err(LlmError::TransportFailure { attempts: 3, .. })));
    }

    #[test]
    fn missing_credential() {
        let mut cfg = config("http://localhost".into());
        cfg.api_key = None;
        assert!(matches!(LiveBackend::new(&cfg), Err(LlmError::MissingCredential(_))));
    }

    #[test]
    fn url_suffix_handling() {
        assert_eq!(config("http://h/v1/".into()).completions_url(), "http://h/v1/chat/completions");
        assert_eq!(config("http://h/v1/chat/completions".into()).completions_url(), "http://h/v1/chat/completions");
    }
}
