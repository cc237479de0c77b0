//! Baseline agents: uniform-random, ReAct, Reflexion, and ReAct with
//! fact extraction and compression (FEC).
//!
//! All LLM baselines share the structured function-call interface. ReAct
//! variants re-prompt once on an illegal action, then fall back to a
//! random legal action so a run never dies on a malformed reply.

use std::collections::VecDeque;

use crate::agents::{Agent, AgentError};
use crate::core::{
    ActionName, CoreError, EpisodeBuffer, FactMemory, HistoryBuffer, HistoryKind, Observation,
    Transition,
};
use crate::envs::EnvSpec;
use crate::facts::{
    format_trajectory_summary, learn_facts_and_update, TrajectorySummary,
    DEFAULT_SUCCESS_THRESHOLD,
};
use crate::llm::prompts::{render_react_step, render_reflect, ReactKnowledge};
use crate::llm::{Backend, FunctionKind, LlmCall, LlmError, REACT_TEMPERATURE};
use crate::rng::SplitMix64;

/// Rolling store of episodic lessons, oldest evicted first.
#[derive(Debug, Clone)]
pub struct LessonBuffer {
    lessons: VecDeque<String>,
    capacity: usize,
}

pub const DEFAULT_LESSON_CAPACITY: usize = 5;

impl LessonBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            lessons: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn with_default_capacity() -> Self {
        Self::new(DEFAULT_LESSON_CAPACITY)
    }

    pub fn push(&mut self, lesson: &str) {
        if self.lessons.len() == self.capacity {
            self.lessons.pop_front();
        }
        self.lessons.push_back(lesson.to_string());
    }

    pub fn texts(&self) -> Vec<String> {
        self.lessons.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.lessons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lessons.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Uniform draw over the allowed actions.
pub fn random_act(allowed: &[ActionName], rng: &mut SplitMix64) -> Result<ActionName, CoreError> {
    if allowed.is_empty() {
        return Err(CoreError::InvalidArgument(
            "cannot act over an empty action set".into(),
        ));
    }
    let pick = rng.next_below(allowed.len() as u64) as usize;
    Ok(allowed[pick].clone())
}

/// One ReAct decision: thought plus action at temperature 0.3. An illegal
/// action is re-prompted once; a second illegal reply falls back to a
/// random legal action with a warning.
pub fn react_act<B: Backend>(
    backend: &B,
    env_description: &str,
    obs: &Observation,
    history: &HistoryBuffer,
    allowed: &[ActionName],
    knowledge: ReactKnowledge<'_>,
    rng: &mut SplitMix64,
) -> Result<(String, ActionName), LlmError> {
    let prompt = render_react_step(
        env_description,
        knowledge,
        obs.as_str(),
        &history.render(),
        allowed,
    );
    let call = LlmCall::new(FunctionKind::ReactStep, prompt, REACT_TEMPERATURE);
    let mut last_thought = String::new();
    for attempt in 0..2 {
        let step = backend.complete(&call)?.expect_react()?;
        if let Some(action) = allowed.iter().find(|a| a.as_str() == step.action) {
            return Ok((step.thought, action.clone()));
        }
        last_thought = step.thought;
        if attempt == 0 {
            log::warn!(
                "illegal action {:?} from react step, re-prompting once",
                step.action
            );
        }
    }
    let fallback = random_act(allowed, rng)
        .map_err(|e| LlmError::InvalidArgument(e.to_string()))?;
    log::warn!(
        "react step produced illegal actions twice, falling back to random action {fallback}"
    );
    Ok((last_thought, fallback))
}

/// Ask the reflector for one lesson on the finished episode and append it.
/// Returns whether the buffer changed; backend failures and empty lessons
/// leave it untouched with a warning.
pub fn reflexion_reflect<B: Backend>(
    backend: &B,
    env_description: &str,
    summary: &TrajectorySummary,
    lessons: &mut LessonBuffer,
) -> bool {
    let prompt = render_reflect(env_description, &summary.render(), &lessons.texts());
    let call = LlmCall::new(FunctionKind::Reflect, prompt, REACT_TEMPERATURE);
    let reflection = match backend.complete(&call).and_then(|r| r.expect_reflect()) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("reflection call failed, keeping lessons unchanged: {e}");
            return false;
        }
    };
    let lesson = reflection.lesson.trim();
    if lesson.is_empty() {
        log::warn!("reflector returned an empty lesson, keeping lessons unchanged");
        return false;
    }
    let words = lesson.split_whitespace().count();
    if words > 20 {
        log::warn!("lesson is {words} words, above the expected 20-word bound: {lesson:?}");
    }
    lessons.push(lesson);
    true
}

/// Acts uniformly at random; learns nothing.
pub struct RandomAgent {
    allowed: Vec<ActionName>,
    rng: SplitMix64,
}

impl RandomAgent {
    pub fn new(spec: &EnvSpec, seed: u64) -> Self {
        Self {
            allowed: spec.allowed_actions.clone(),
            rng: SplitMix64::new(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn begin_episode(&mut self, _obs: &Observation) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&mut self, _obs: &Observation) -> Result<ActionName, AgentError> {
        Ok(random_act(&self.allowed, &mut self.rng)?)
    }

    fn observe(&mut self, _transition: &Transition) -> Result<(), AgentError> {
        Ok(())
    }

    fn end_episode(&mut self, _episode: &EpisodeBuffer) -> Result<(), AgentError> {
        Ok(())
    }
}

/// Thought-then-act agent with no cross-episode learning.
pub struct ReactAgent<B: Backend> {
    backend: B,
    env_description: String,
    allowed: Vec<ActionName>,
    history: HistoryBuffer,
    rng: SplitMix64,
}

impl<B: Backend> ReactAgent<B> {
    pub fn new(backend: B, spec: &EnvSpec, seed: u64) -> Self {
        Self {
            backend,
            env_description: spec.description.clone(),
            allowed: spec.allowed_actions.clone(),
            history: HistoryBuffer::with_default_capacity(),
            rng: SplitMix64::new(seed),
        }
    }
}

impl<B: Backend> Agent for ReactAgent<B> {
    fn name(&self) -> &str {
        "react"
    }

    fn begin_episode(&mut self, obs: &Observation) -> Result<(), AgentError> {
        self.history.clear();
        self.history.push(HistoryKind::Obs, obs.as_str())?;
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<ActionName, AgentError> {
        let (_, action) = react_act(
            &self.backend,
            &self.env_description,
            obs,
            &self.history,
            &self.allowed,
            ReactKnowledge::None,
            &mut self.rng,
        )?;
        Ok(action)
    }

    fn observe(&mut self, transition: &Transition) -> Result<(), AgentError> {
        self.history
            .push_pair(&transition.action, &transition.next_obs)?;
        Ok(())
    }

    fn end_episode(&mut self, _episode: &EpisodeBuffer) -> Result<(), AgentError> {
        Ok(())
    }
}

/// ReAct conditioned on a rolling buffer of episodic lessons, refreshed
/// by a post-episode reflection call.
pub struct ReflexionAgent<B: Backend> {
    backend: B,
    env_description: String,
    allowed: Vec<ActionName>,
    history: HistoryBuffer,
    lessons: LessonBuffer,
    success_threshold: f64,
    rng: SplitMix64,
}

impl<B: Backend> ReflexionAgent<B> {
    pub fn new(backend: B, spec: &EnvSpec, seed: u64) -> Self {
        Self {
            backend,
            env_description: spec.description.clone(),
            allowed: spec.allowed_actions.clone(),
            history: HistoryBuffer::with_default_capacity(),
            lessons: LessonBuffer::with_default_capacity(),
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            rng: SplitMix64::new(seed),
        }
    }

    pub fn lessons(&self) -> &LessonBuffer {
        &self.lessons
    }
}

impl<B: Backend> Agent for ReflexionAgent<B> {
    fn name(&self) -> &str {
        "reflexion"
    }

    fn begin_episode(&mut self, obs: &Observation) -> Result<(), AgentError> {
        self.history.clear();
        self.history.push(HistoryKind::Obs, obs.as_str())?;
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<ActionName, AgentError> {
        let lessons = self.lessons.texts();
        let (_, action) = react_act(
            &self.backend,
            &self.env_description,
            obs,
            &self.history,
            &self.allowed,
            ReactKnowledge::Lessons(&lessons),
            &mut self.rng,
        )?;
        Ok(action)
    }

    fn observe(&mut self, transition: &Transition) -> Result<(), AgentError> {
        self.history
            .push_pair(&transition.action, &transition.next_obs)?;
        Ok(())
    }

    fn end_episode(&mut self, episode: &EpisodeBuffer) -> Result<(), AgentError> {
        let summary = format_trajectory_summary(episode, self.success_threshold)?;
        reflexion_reflect(
            &self.backend,
            &self.env_description,
            &summary,
            &mut self.lessons,
        );
        Ok(())
    }
}

/// ReAct conditioned on the fact memory, updated post-episode by the same
/// fact extraction and compression path the planning agent uses.
pub struct ReactFecAgent<B: Backend> {
    backend: B,
    env_description: String,
    allowed: Vec<ActionName>,
    history: HistoryBuffer,
    memory: FactMemory,
    episode_facts: Vec<String>,
    compress_enabled: bool,
    success_threshold: f64,
    rng: SplitMix64,
}

impl<B: Backend> ReactFecAgent<B> {
    pub fn new(backend: B, spec: &EnvSpec, seed: u64) -> Self {
        Self {
            backend,
            env_description: spec.description.clone(),
            allowed: spec.allowed_actions.clone(),
            history: HistoryBuffer::with_default_capacity(),
            memory: FactMemory::with_default_capacity(),
            episode_facts: Vec::new(),
            compress_enabled: true,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            rng: SplitMix64::new(seed),
        }
    }

    pub fn set_compress_enabled(&mut self, enabled: bool) {
        self.compress_enabled = enabled;
    }

    pub fn memory(&self) -> &FactMemory {
        &self.memory
    }
}

impl<B: Backend> Agent for ReactFecAgent<B> {
    fn name(&self) -> &str {
        "react_fec"
    }

    fn begin_episode(&mut self, obs: &Observation) -> Result<(), AgentError> {
        self.history.clear();
        self.history.push(HistoryKind::Obs, obs.as_str())?;
        self.episode_facts = self.memory.texts();
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<ActionName, AgentError> {
        let (_, action) = react_act(
            &self.backend,
            &self.env_description,
            obs,
            &self.history,
            &self.allowed,
            ReactKnowledge::Facts(&self.episode_facts),
            &mut self.rng,
        )?;
        Ok(action)
    }

    fn observe(&mut self, transition: &Transition) -> Result<(), AgentError> {
        self.history
            .push_pair(&transition.action, &transition.next_obs)?;
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
