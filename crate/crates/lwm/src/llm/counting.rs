//! Wrapper backend that counts completed calls per function.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{Backend, FunctionKind, LlmCall, LlmError, LlmResult};

/// Delegates to an inner backend and tallies every attempted call by
/// function kind (failures count too: the tally measures traffic).
pub struct CountingBackend<B> {
    inner: B,
    counts: Mutex<HashMap<FunctionKind, u64>>,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            counts: Mutex::new(HashMap::new()),
        }
    }

    pub fn count(&self, kind: FunctionKind) -> u64 {
        *self.counts.lock().unwrap().get(&kind).unwrap_or(&0)
    }

    pub fn total(&self) -> u64 {
        self.counts.lock().unwrap().values().sum()
    }

    /// Per-kind tallies sorted by function name.
    pub fn tallies(&self) -> Vec<(FunctionKind, u64)> {
        let counts = self.counts.lock().unwrap();
        let mut out: Vec<(FunctionKind, u64)> = FunctionKind::ALL
            .into_iter()
            .filter_map(|k| counts.get(&k).map(|n| (k, *n)))
            .collect();
        out.sort_by_key(|(k, _)| k.name());
        out
    }

    pub fn reset(&self) {
        self.counts.lock().unwrap().clear();
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        *self
            .counts
            .lock()
            .unwrap()
            .entry(call.function)
            .or_insert(0) += 1;
        self.inner.complete(call)
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}
