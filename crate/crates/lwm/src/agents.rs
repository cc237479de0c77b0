//! The episodic agent protocol and the fact-conditioned planning agent.
//!
//! A harness drives agents through `begin_episode` / `act` / `observe` /
//! `end_episode`. `LwmAgent` plans each action with depth-limited lookahead
//! over the fact list snapshotted at episode start, then distills new facts
//! from the finished trajectory.

use thiserror::Error;

use crate::core::{
    ActionName, CoreError, EpisodeBuffer, FactMemory, HistoryBuffer, HistoryKind, Observation,
    Transition,
};
use crate::envs::EnvSpec;
use crate::facts::{learn_facts_and_update, FactError, DEFAULT_SUCCESS_THRESHOLD};
use crate::llm::{Backend, LlmError};
use crate::planner::{PlanConfig, PlanTraceRecord, Planner, PlannerError, TerminalSet};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Facts(#[from] FactError),
}

/// An episodic decision-maker the harness can run against any `Env`.
pub trait Agent {
    /// CLI-stable agent name, e.g. `lwm` or `react`.
    fn name(&self) -> &str;

    /// Start a fresh episode from its first observation.
    fn begin_episode(&mut self, obs: &Observation) -> Result<(), AgentError>;

    /// Choose the next action for the current observation.
    fn act(&mut self, obs: &Observation) -> Result<ActionName, AgentError>;

    /// Record a real environment transition.
    fn observe(&mut self, transition: &Transition) -> Result<(), AgentError>;

    /// Learn from the completed (possibly truncated) episode.
    fn end_episode(&mut self, episode: &EpisodeBuffer) -> Result<(), AgentError>;
}

/// Planning agent: acts by lookahead search over facts frozen at episode
/// start, learns by post-episode fact extraction and compression.
pub struct LwmAgent<B: Backend> {
    backend: B,
    cfg: PlanConfig,
    env_description: String,
    allowed: Vec<ActionName>,
    memory: FactMemory,
    terminals: TerminalSet,
    history: HistoryBuffer,
    episode_facts: Vec<String>,
    compress_enabled: bool,
    success_threshold: f64,
    rng: SplitMix64,
    tracing: bool,
    trace_log: Vec<PlanTraceRecord>,
}

impl<B: Backend> LwmAgent<B> {
    pub fn new(backend: B, spec: &EnvSpec, cfg: PlanConfig, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        Ok(Self {
            backend,
            cfg,
            env_description: spec.description.clone(),
            allowed: spec.allowed_actions.clone(),
            memory: FactMemory::with_default_capacity(),
            terminals: TerminalSet::new(),
            history: HistoryBuffer::with_default_capacity(),
            episode_facts: Vec::new(),
            compress_enabled: true,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            rng: SplitMix64::new(seed),
            tracing: false,
            trace_log: Vec::new(),
        })
    }

    pub fn set_compress_enabled(&mut self, enabled: bool) {
        self.compress_enabled = enabled;
    }

    pub fn set_success_threshold(&mut self, threshold: f64) {
        self.success_threshold = threshold;
    }

    /// Accumulate per-node search records from every plan; drain with
    /// [`take_trace`](Self::take_trace).
    pub fn set_tracing(&mut self, enabled: bool) {
        self.tracing = enabled;
    }

    pub fn take_trace(&mut self) -> Vec<PlanTraceRecord> {
        std::mem::take(&mut self.trace_log)
    }

    pub fn memory(&self) -> &FactMemory {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut FactMemory {
        &mut self.memory
    }

    pub fn terminals(&self) -> &TerminalSet {
        &self.terminals
    }
}

impl<B: Backend> Agent for LwmAgent<B> {
    fn name(&self) -> &str {
        "lwm"
    }

    fn begin_episode(&mut self, obs: &Observation) -> Result<(), AgentError> {
        self.history.clear();
        self.history.push(HistoryKind::Obs, obs.as_str())?;
        self.episode_facts = self.memory.texts();
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<ActionName, AgentError> {
        let mut planner = Planner::new(
            &self.backend,
            self.cfg,
            &self.env_description,
            &self.allowed,
            self.episode_facts.clone(),
            &self.terminals,
        )?;
        let action = planner.plan_action(obs, &self.history, &mut self.rng)?;
        if self.tracing {
            self.trace_log.extend_from_slice(planner.trace());
        }
        Ok(action)
    }

    fn observe(&mut self, transition: &Transition) -> Result<(), AgentError> {
        self.history
            .push_pair(&transition.action, &transition.next_obs)?;
        if transition.done {
            self.terminals.insert(transition.next_obs.as_str());
        }
        Ok(())
    }

    fn end_episode(&mut self, episode: &EpisodeBuffer) -> Result<(), AgentError> {
        learn_facts_and_update(
            &self.backend,
            episode,
            &mut self.memory,
            &self.env_description,
            self.compress_enabled,
            self.success_threshold,
        )?;
        Ok(())
    }
}
