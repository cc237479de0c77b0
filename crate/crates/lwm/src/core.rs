//! Shared vocabulary types: observations, actions, atomic facts, bounded
//! fact and history buffers, and episode transcripts.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Default capacity of [`FactMemory`].
pub const DEFAULT_FACT_CAPACITY: usize = 200;
/// Default capacity, in lines, of [`HistoryBuffer`].
pub const DEFAULT_HISTORY_CAPACITY: usize = 51;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One textual observation emitted by an environment.
///
/// Non-empty and free of trailing newlines so it can be embedded verbatim
/// in prompt blocks and single-line logs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(String);

impl Observation {
    pub fn new(text: impl Into<String>) -> Result<Self, CoreError> {
        let text = text.into();
        if text.is_empty() {
            return Err(CoreError::InvalidArgument("empty observation".into()));
        }
        if text.ends_with('\n') || text.ends_with('\r') {
            return Err(CoreError::InvalidArgument(
                "observation has trailing newline".into(),
            ));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of one environment action, a non-empty token such as `right` or `4`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionName(String);

impl ActionName {
    pub fn new(name: impl Into<String>) -> Result<Self, CoreError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(CoreError::InvalidArgument("empty action name".into()));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Collapse whitespace runs to single spaces and trim the ends.
///
/// This is the canonical form used for fact deduplication. Case is
/// preserved: `"Hole"` and `"hole"` stay distinct.
pub fn canonicalize_fact_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One atomic fact about the environment, e.g. `(1,0) is a hole.`
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomicFact(String);

impl AtomicFact {
    /// Build a fact from raw text. Fails if the text canonicalizes to empty.
    pub fn new(text: impl Into<String>) -> Result<Self, CoreError> {
        let canonical = canonicalize_fact_text(&text.into());
        if canonical.is_empty() {
            return Err(CoreError::InvalidArgument(
                "fact canonicalizes to empty".into(),
            ));
        }
        Ok(Self(canonical))
    }

    /// The canonical text of the fact.
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AtomicFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Result of inserting one fact into [`FactMemory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    /// An equal fact (after canonicalization) was already stored.
    Duplicate,
    /// The text canonicalized to empty and was dropped.
    Rejected,
}

/// Bounded, order-preserving store of unique atomic facts.
///
/// Facts are kept in insertion order. When the store is full the oldest
/// fact is evicted first.
#[derive(Debug, Clone)]
pub struct FactMemory {
    facts: VecDeque<AtomicFact>,
    capacity: usize,
}

impl FactMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "fact memory capacity must be positive");
        Self {
            facts: VecDeque::new(),
            capacity,
        }
    }

    pub fn with_default_capacity() -> Self {
        Self::new(DEFAULT_FACT_CAPACITY)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        let canonical = canonicalize_fact_text(text);
        self.facts.iter().any(|f| f.as_str() == canonical)
    }

    /// Insert raw fact text, deduplicating on the canonical form.
    pub fn insert(&mut self, text: &str) -> InsertOutcome {
        let fact = match AtomicFact::new(text) {
            Ok(f) => f,
            Err(_) => {
                log::warn!("dropping fact that canonicalizes to empty: {text:?}");
                return InsertOutcome::Rejected;
            }
        };
        if self.facts.iter().any(|f| f == &fact) {
            return InsertOutcome::Duplicate;
        }
        if self.facts.len() == self.capacity {
            self.facts.pop_front();
        }
        self.facts.push_back(fact);
        InsertOutcome::Inserted
    }

    /// Replace the whole contents with `facts`, keeping order, dedup, and
    /// the capacity bound.
    pub fn replace_with(&mut self, facts: &[AtomicFact]) {
        self.facts.clear();
        for fact in facts {
            self.insert(fact.as_str());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicFact> {
        self.facts.iter()
    }

    /// Facts in insertion order, cloned.
    pub fn snapshot(&self) -> Vec<AtomicFact> {
        self.facts.iter().cloned().collect()
    }

    /// Fact texts in insertion order.
    pub fn texts(&self) -> Vec<String> {
        self.facts.iter().map(|f| f.as_str().to_string()).collect()
    }
}

/// Which side of an interaction a history line records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryKind {
    Obs,
    Act,
}

/// Render one history line: `Obs: {text}` or `Act: {text}`.
pub fn format_history_line(kind: HistoryKind, text: &str) -> Result<String, CoreError> {
    if text.is_empty() {
        return Err(CoreError::InvalidArgument("empty history text".into()));
    }
    Ok(match kind {
        HistoryKind::Obs => format!("Obs: {text}"),
        HistoryKind::Act => format!("Act: {text}"),
    })
}

/// Bounded FIFO of rendered interaction lines fed into prompts.
///
/// Capacity counts lines, so one action/observation pair consumes two
/// slots. The oldest line falls off first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryBuffer {
    lines: VecDeque<String>,
    capacity: usize,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            lines: VecDeque::new(),
            capacity,
        }
    }

    pub fn with_default_capacity() -> Self {
        Self::new(DEFAULT_HISTORY_CAPACITY)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn clear(&mut self) {
        self.lines.clear();
    }

    pub fn push(&mut self, kind: HistoryKind, text: &str) -> Result<(), CoreError> {
        let line = format_history_line(kind, text)?;
        if self.lines.len() == self.capacity {
            self.lines.pop_front();
        }
        self.lines.push_back(line);
        Ok(())
    }

    /// Append an action line followed by the observation it produced.
    pub fn push_pair(&mut self, action: &ActionName, obs: &Observation) -> Result<(), CoreError> {
        self.push(HistoryKind::Act, action.as_str())?;
        self.push(HistoryKind::Obs, obs.as_str())
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(|s| s.as_str())
    }

    /// All lines joined with newlines, oldest first.
    pub fn render(&self) -> String {
        self.lines.iter().cloned().collect::<Vec<_>>().join("\n")
    }
}

/// One environment step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    pub action: ActionName,
    pub reward: f64,
    pub next_obs: Observation,
    pub done: bool,
}

/// Ordered transcript of one episode with its running return.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBuffer {
    pub transitions: Vec<Transition>,
    pub total_reward: f64,
}

impl EpisodeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a transition, accumulating the reward in arrival order so the
    /// stored total equals a left fold over the transcript bit for bit.
    pub fn push(&mut self, transition: Transition) {
        self.total_reward += transition.reward;
        self.transitions.push(transition);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// True when the final transition ended the episode (as opposed to the
    /// step budget running out).
    pub fn ended_by_env(&self) -> bool {
        self.transitions.last().map(|t| t.done).unwrap_or(false)
    }
}
