use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub model_name: String,
    pub created_at: String,
    pub pipeline_config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub digest: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

/// Ordered record of chat exchanges, stored as JSON Lines: one `{"meta": ..}`
/// header line followed by one entry per line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub meta: Option<TranscriptMeta>,
    pub entries: Vec<TranscriptEntry>,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: TranscriptMeta,
}

impl Transcript {
    pub fn push(&mut self, request: ChatRequest, response: ChatResponse) {
        self.entries.push(TranscriptEntry { digest: request.digest(), request, response });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if let Some(meta) = &self.meta {
            out.push_str(&serde_json::to_string(&MetaLine { meta: meta.clone() }).expect("meta serializes"));
            out.push('\n');
        }
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut transcript = Transcript::default();
        for (index, line) in text.lines().enumerate() {
            let line_no = index + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| LlmError::Transcript { line: line_no, message: e.to_string() })?;
            if value.get("meta").is_some() {
                let meta: MetaLine = serde_json::from_value(value)
                    .map_err(|e| LlmError::Transcript { line: line_no, message: e.to_string() })?;
                transcript.meta = Some(meta.meta);
            } else {
                let entry: TranscriptEntry = serde_json::from_value(value)
                    .map_err(|e| LlmError::Transcript { line: line_no, message: e.to_string() })?;
                if entry.digest != entry.request.digest() {
                    return Err(LlmError::Transcript {
                        line: line_no,
                        message: "stored digest does not match the request".into(),
                    });
                }
                transcript.entries.push(entry);
            }
        }
        Ok(transcript)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Transcript::from_jsonl(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LlmError> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }
}

/// Serves recorded responses by request digest. Repeated identical requests
/// receive their recorded responses in order.
pub struct ReplayBackend {
    queues: Mutex<HashMap<String, VecDeque<ChatResponse>>>,
}

impl ReplayBackend {
    pub fn new(transcript: &Transcript) -> Self {
        let mut queues: HashMap<String, VecDeque<ChatResponse>> = HashMap::new();
        for entry in &transcript.entries {
            queues.entry(entry.digest.clone()).or_default().push_back(entry.response.clone());
        }
        ReplayBackend { queues: Mutex::new(queues) }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Ok(ReplayBackend::new(&Transcript::load(path)?))
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let digest = request.digest();
        let mut queues = self.queues.lock().expect("replay lock poisoned");
        queues.get_mut(&digest).and_then(VecDeque::pop_front).ok_or(LlmError::ReplayMiss { digest })
    }
}

/// Delegates to an inner backend and appends every successful exchange to a
/// transcript.
pub struct RecordingBackend<B> {
    inner: B,
    transcript: Mutex<Transcript>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, meta: Option<TranscriptMeta>) -> Self {
        RecordingBackend { inner, transcript: Mutex::new(Transcript { meta, entries: Vec::new() }) }
    }

    pub fn transcript(&self) -> Transcript {
        self.transcript.lock().expect("transcript lock poisoned").clone()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LlmError> {
        self.transcript().save(path)
    }

    pub fn into_inner(self) -> (B, Transcript) {
        (self.inner, self.transcript.into_inner().expect("transcript lock poisoned"))
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let response = self.inner.complete(request)?;
        self.transcript.lock().expect("transcript lock poisoned").push(request.clone(), response.clone());
        Ok(response)
    }
}
