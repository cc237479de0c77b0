//! Scripted backend for tests: pops canned results in FIFO order and logs
//! every call it receives.

use std::collections::VecDeque;
use std::sync::Mutex;

use super::{Backend, LlmCall, LlmError, LlmResult};

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<LlmResult>>,
    calls: Mutex<Vec<LlmCall>>,
}

impl ScriptedBackend {
    pub fn new(results: impl IntoIterator<Item = LlmResult>) -> Self {
        Self {
            queue: Mutex::new(results.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Queue one more result.
    pub fn push(&self, result: LlmResult) {
        self.queue.lock().unwrap().push_back(result);
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap().len()
    }

    /// Every call received so far, in order.
    pub fn calls(&self) -> Vec<LlmCall> {
        self.calls.lock().unwrap().clone()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        self.calls.lock().unwrap().push(call.clone());
        let result = self
            .queue
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| LlmError::Backend("scripted backend ran out of results".into()))?;
        if result.kind() != call.function {
            return Err(LlmError::Contract(format!(
                "scripted result is {}, call wanted {}",
                result.kind().name(),
                call.function.name()
            )));
        }
        Ok(result)
    }

    fn label(&self) -> String {
        "scripted".to_string()
    }
}
