use std::collections::VecDeque;
use std::sync::Mutex;

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError};

/// Answers requests from a fixed queue, in call order. Keeps every request it
/// saw so tests can inspect prompts.
#[derive(Default)]
pub struct ScriptedBackend {
    responses: Mutex<VecDeque<String>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().expect("scripted lock poisoned").clone()
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("scripted lock poisoned").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.seen.lock().expect("scripted lock poisoned").push(request.clone());
        self.responses
            .lock()
            .expect("scripted lock poisoned")
            .pop_front()
            .map(ChatResponse::text)
            .ok_or(LlmError::ScriptExhausted)
    }
}
