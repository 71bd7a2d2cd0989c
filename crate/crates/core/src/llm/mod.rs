//! Chat-completion access for the reconstruction pipeline.
//!
//! Every backend implements [`ChatBackend`]. [`LiveBackend`] talks to an
//! OpenAI-compatible HTTP endpoint, [`ReplayBackend`] serves responses from a
//! recorded [`Transcript`], [`RecordingBackend`] captures a transcript while
//! delegating to another backend and [`ScriptedBackend`] answers from a fixed
//! queue for tests and fixtures.

mod live;
pub mod parse;
mod scripted;
mod transcript;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use live::{EndpointConfig, LiveBackend, DEFAULT_API_KEY_ENV};
pub use parse::{
    is_none_answer, parse_enumerated_components, parse_id_list, parse_label_groups, parse_relations, ParseError,
};
pub use scripted::ScriptedBackend;
pub use transcript::{RecordingBackend, ReplayBackend, Transcript, TranscriptEntry, TranscriptMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub model_name: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub max_output_tokens: u32,
}

#[derive(Serialize)]
struct DigestFields<'a> {
    system_prompt: &'a str,
    user_prompt: &'a str,
    model_name: &'a str,
    temperature: f64,
    seed: Option<u64>,
}

impl ChatRequest {
    /// Stable SHA-256 over prompts, model name, temperature and seed.
    /// `max_output_tokens` is deliberately not part of the key.
    pub fn digest(&self) -> String {
        let fields = DigestFields {
            system_prompt: &self.system_prompt,
            user_prompt: &self.user_prompt,
            model_name: &self.model_name,
            temperature: self.temperature,
            seed: self.seed,
        };
        let payload = serde_json::to_vec(&fields).expect("digest fields serialize");
        hex(&Sha256::digest(&payload))
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_prompt.trim().is_empty() || self.user_prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompts must be non-empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub token_usage: Option<TokenUsage>,
}

impl ChatResponse {
    pub fn text(text: impl Into<String>) -> Self {
        ChatResponse { text: text.into(), token_usage: None }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    TransportFailure { attempts: u32, message: String },
    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("no recorded response for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("scripted backend has no responses left")]
    ScriptExhausted,
    #[error("missing credential: set {0} or api_key in the endpoint config")]
    MissingCredential(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("transcript error at line {line}: {message}")]
    Transcript { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A chat-completion provider. Implementations must tolerate concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}
