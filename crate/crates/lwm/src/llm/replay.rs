//! Record/replay cassettes: a JSONL store keyed by a hash of the call.
//!
//! Each line holds one completed call: `{key, function, prompt, result}`.
//! The key is a SHA-256 over the function name, the canonicalized user
//! prompt, and the temperature, so replay is exact whenever the same
//! logical call recurs. Recording wraps any inner backend and appends
//! entries as calls complete; replay serves entirely from the file and
//! fails loudly on a miss.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{cassette_key, Backend, FunctionKind, LlmCall, LlmError, LlmResult};

/// One serialized cassette line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: String,
    pub function: String,
    pub prompt: String,
    pub result: serde_json::Value,
}

/// Serves completions from a cassette file written by [`RecordingBackend`].
pub struct ReplayBackend {
    path: PathBuf,
    entries: HashMap<String, (FunctionKind, serde_json::Value)>,
}

impl ReplayBackend {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| {
            LlmError::Backend(format!("cannot open cassette {}: {e}", path.display()))
        })?;
        let mut entries = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| {
                LlmError::Backend(format!("cannot read cassette {}: {e}", path.display()))
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry = serde_json::from_str(&line).map_err(|e| {
                LlmError::Parse(format!(
                    "bad cassette line {} in {}: {e}",
                    lineno + 1,
                    path.display()
                ))
            })?;
            let function = FunctionKind::from_name(&entry.function).ok_or_else(|| {
                LlmError::Parse(format!(
                    "unknown function {:?} on cassette line {}",
                    entry.function,
                    lineno + 1
                ))
            })?;
            // Validate the stored result against its schema at load time so
            // corrupt files fail fast, not at first use.
            LlmResult::from_arguments(function, &entry.result)?;
            entries.insert(entry.key, (function, entry.result));
        }
        Ok(Self { path, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let key = cassette_key(call.function, &call.user, call.temperature);
        let (function, arguments) = self.entries.get(&key).ok_or_else(|| {
            LlmError::MissingCassette(format!(
                "no entry for {} call (key {key}) in {}",
                call.function.name(),
                self.path.display()
            ))
        })?;
        if *function != call.function {
            return Err(LlmError::Contract(format!(
                "cassette entry {key} was recorded for {}, requested {}",
                function.name(),
                call.function.name()
            )));
        }
        LlmResult::from_arguments(call.function, arguments)
    }

    fn label(&self) -> String {
        format!("replay:{}", self.path.display())
    }
}

/// Delegates to an inner backend and appends each new completion to a
/// cassette file, one JSON line per distinct key.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    sink: Mutex<RecordSink>,
}

struct RecordSink {
    file: File,
    seen: std::collections::HashSet<String>,
}

impl<B> RecordingBackend<B> {
    /// Open `path` for appending, creating it if needed. Keys already in
    /// the file are not rewritten.
    pub fn create(inner: B, path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let mut seen = std::collections::HashSet::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| {
                LlmError::Backend(format!("cannot open cassette {}: {e}", path.display()))
            })?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| {
                    LlmError::Backend(format!("cannot read cassette {}: {e}", path.display()))
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CassetteEntry = serde_json::from_str(&line)
                    .map_err(|e| LlmError::Parse(format!("bad cassette line: {e}")))?;
                seen.insert(entry.key);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| {
                LlmError::Backend(format!("cannot append to {}: {e}", path.display()))
            })?;
        Ok(Self {
            inner,
            path,
            sink: Mutex::new(RecordSink { file, seen }),
        })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let result = self.inner.complete(call)?;
        let key = cassette_key(call.function, &call.user, call.temperature);
        let mut sink = self.sink.lock().unwrap();
        if sink.seen.insert(key.clone()) {
            let entry = CassetteEntry {
                key,
                function: call.function.name().to_string(),
                prompt: call.user.clone(),
                result: result.to_arguments(),
            };
            let line = serde_json::to_string(&entry)
                .map_err(|e| LlmError::Backend(format!("cannot serialize entry: {e}")))?;
            writeln!(sink.file, "{line}").map_err(|e| {
                LlmError::Backend(format!("cannot write {}: {e}", self.path.display()))
            })?;
            sink.file.flush().map_err(|e| {
                LlmError::Backend(format!("cannot flush {}: {e}", self.path.display()))
            })?;
        }
        Ok(result)
    }

    fn label(&self) -> String {
        format!("record({})", self.inner.label())
    }
}
