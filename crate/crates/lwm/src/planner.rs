//! Depth-limited recursive lookahead over a simulated world model.
//!
//! One `Planner` instance serves one top-level `plan_action` invocation:
//! its memo cache is scoped to that call and the fact list is frozen at
//! construction. Branch values back up through `Q = r' - lambda_step +
//! gamma * V(next)`, ties resolve to the earliest proposal, and a branch
//! whose backend calls fail scores negative infinity rather than aborting
//! the plan.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::core::{ActionName, HistoryBuffer, HistoryKind, Observation};
use crate::llm::prompts::{
    render_estimate_value, render_propose_actions, render_simulate_step,
};
use crate::llm::{
    Backend, FunctionKind, LlmCall, LlmError, SimulateStepResult, PLANNER_TEMPERATURE,
};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all {0} root branches failed")]
    AllBranchesFailed(usize),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Search hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    /// Search depth in simulated steps.
    pub depth: u32,
    /// Maximum actions proposed per node.
    pub branch: usize,
    /// Discount factor in [0, 1).
    pub gamma: f64,
    /// Per-step penalty subtracted from every simulated reward.
    pub lambda_step: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            branch: 4,
            gamma: 0.99,
            lambda_step: 0.01,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.depth < 1 {
            return Err(PlannerError::InvalidArgument(
                "search depth must be at least 1".into(),
            ));
        }
        if self.branch < 1 {
            return Err(PlannerError::InvalidArgument(
                "branch factor must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(PlannerError::InvalidArgument(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.lambda_step < 0.0 {
            return Err(PlannerError::InvalidArgument(format!(
                "step penalty must be non-negative, got {}",
                self.lambda_step
            )));
        }
        Ok(())
    }
}

/// One-step lookahead backup.
pub fn compute_q(r_prime: f64, lambda_step: f64, gamma: f64, v_next: f64) -> f64 {
    r_prime - lambda_step + gamma * v_next
}

/// Observations known to end the episode, maintained across steps from
/// real transitions only.
#[derive(Debug, Clone, Default)]
pub struct TerminalSet {
    set: HashSet<String>,
}

impl TerminalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, obs: &str) {
        self.set.insert(obs.to_string());
    }

    pub fn contains(&self, obs: &str) -> bool {
        self.set.contains(obs)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// One expanded search node, emitted when tracing is on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanTraceRecord {
    pub depth: u32,
    pub obs: String,
    pub action: String,
    pub r: f64,
    pub v_next: f64,
    pub q: f64,
}

enum CacheEntry {
    Propose(Vec<String>),
    Simulate(SimulateStepResult),
    Value(f64),
}

/// Digest of the fact list, order-independent: facts are sorted before
/// hashing so two planners over the same set share cache identity.
fn facts_digest(facts: &[String]) -> String {
    let mut sorted: Vec<&str> = facts.iter().map(|s| s.as_str()).collect();
    sorted.sort_unstable();
    let mut hasher = Sha256::new();
    for fact in sorted {
        hasher.update(fact.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

fn cache_key(kind: &str, obs: &str, action: Option<&str>, history: &str, digest: &str) -> String {
    let mut hasher = Sha256::new();
    for part in [kind, obs, action.unwrap_or(""), history, digest] {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(hasher.finalize())
}

/// One plan invocation over a frozen fact snapshot.
pub struct Planner<'a, B: Backend> {
    backend: &'a B,
    cfg: PlanConfig,
    env_description: &'a str,
    allowed: &'a [ActionName],
    facts: Vec<String>,
    digest: String,
    terminals: &'a TerminalSet,
    cache: HashMap<String, CacheEntry>,
    trace: Vec<PlanTraceRecord>,
}

impl<'a, B: Backend> Planner<'a, B> {
    pub fn new(
        backend: &'a B,
        cfg: PlanConfig,
        env_description: &'a str,
        allowed: &'a [ActionName],
        facts: Vec<String>,
        terminals: &'a TerminalSet,
    ) -> Result<Self, PlannerError> {
        cfg.validate()?;
        if allowed.is_empty() {
            return Err(PlannerError::InvalidArgument(
                "allowed action set is empty".into(),
            ));
        }
        let digest = facts_digest(&facts);
        Ok(Self {
            backend,
            cfg,
            env_description,
            allowed,
            facts,
            digest,
            terminals,
            cache: HashMap::new(),
            trace: Vec::new(),
        })
    }

    /// Expanded-node records from the most recent plan, in expansion order.
    pub fn trace(&self) -> &[PlanTraceRecord] {
        &self.trace
    }

    /// Choose the root action: expand each proposal one simulated step,
    /// back up values from depth-limited recursion, and take the argmax
    /// with first-proposal tie-breaking.
    ///
    /// An empty proposal list falls back to a uniformly random legal
    /// action drawn from `rng`.
    pub fn plan_action(
        &mut self,
        obs: &Observation,
        history: &HistoryBuffer,
        rng: &mut SplitMix64,
    ) -> Result<ActionName, PlannerError> {
        let proposals = self.propose(obs.as_str(), &history.render())?;
        if proposals.is_empty() {
            let pick = rng.next_below(self.allowed.len() as u64) as usize;
            let action = self.allowed[pick].clone();
            log::warn!(
                "proposer returned no actions at {:?}, falling back to random legal action {}",
                obs.as_str(),
                action
            );
            return Ok(action);
        }
        let mut best: Option<(f64, &String)> = None;
        let mut failures = 0usize;
        for action in &proposals {
            match self.expand(obs.as_str(), history, action, self.cfg.depth) {
                Ok(q) => {
                    if best.is_none() || q > best.as_ref().unwrap().0 {
                        best = Some((q, action));
                    }
                }
                Err(e) => {
                    failures += 1;
                    log::warn!("branch {action:?} failed, scoring -inf: {e}");
                }
            }
        }
        match best {
            Some((_, action)) => ActionName::new(action.clone())
                .map_err(|e| PlannerError::InvalidArgument(e.to_string())),
            None => Err(PlannerError::AllBranchesFailed(failures)),
        }
    }

    /// Simulate `action` from `(obs, history)` and back up its Q-value,
    /// recording a trace entry. `depth` is the remaining budget at this
    /// node; the child recursion sees `depth - 1`.
    fn expand(
        &mut self,
        obs: &str,
        history: &HistoryBuffer,
        action: &str,
        depth: u32,
    ) -> Result<f64, PlannerError> {
        let sim = self.simulate(obs, &history.render(), action)?;
        let v_next = if sim.done {
            0.0
        } else {
            let mut child_history = history.clone();
            child_history
                .push(HistoryKind::Act, action)
                .map_err(|e| PlannerError::InvalidArgument(e.to_string()))?;
            child_history
                .push(HistoryKind::Obs, &sim.next_observation)
                .map_err(|e| PlannerError::InvalidArgument(e.to_string()))?;
            self.estimate_node_value(&sim.next_observation, &child_history, depth - 1)?
        };
        let q = compute_q(sim.reward, self.cfg.lambda_step, self.cfg.gamma, v_next);
        self.trace.push(PlanTraceRecord {
            depth,
            obs: obs.to_string(),
            action: action.to_string(),
            r: sim.reward,
            v_next,
            q,
        });
        Ok(q)
    }

    /// Node value at the given remaining depth: leaf and known-terminal
    /// nodes ask the value estimator directly; interior nodes take the
    /// max backed-up Q over their proposals.
    pub fn estimate_node_value(
        &mut self,
        obs: &str,
        history: &HistoryBuffer,
        depth: u32,
    ) -> Result<f64, PlannerError> {
        if depth == 0 || self.terminals.contains(obs) {
            return self.value_estimate(obs, &history.render());
        }
        let proposals = self.propose(obs, &history.render())?;
        if proposals.is_empty() {
            return self.value_estimate(obs, &history.render());
        }
        let mut best: Option<f64> = None;
        let mut last_error: Option<PlannerError> = None;
        for action in &proposals {
            match self.expand(obs, history, action, depth) {
                Ok(q) => {
                    if best.is_none() || q > best.unwrap() {
                        best = Some(q);
                    }
                }
                Err(e) => {
                    log::warn!("inner branch {action:?} failed, scoring -inf: {e}");
                    last_error = Some(e);
                }
            }
        }
        match best {
            Some(v) => Ok(v),
            None => Err(last_error.unwrap_or(PlannerError::AllBranchesFailed(0))),
        }
    }

    fn propose(&mut self, obs: &str, history: &str) -> Result<Vec<String>, PlannerError> {
        let key = cache_key("propose", obs, None, history, &self.digest);
        if let Some(CacheEntry::Propose(actions)) = self.cache.get(&key) {
            return Ok(actions.clone());
        }
        let prompt = render_propose_actions(
            self.env_description,
            &self.facts,
            obs,
            history,
            self.cfg.branch,
            self.allowed,
        );
        let call = LlmCall::new(FunctionKind::ProposeActions, prompt, PLANNER_TEMPERATURE);
        let result = self.backend.complete(&call)?.expect_propose()?;
        let mut actions = Vec::new();
        for action in result.actions {
            if !self.allowed.iter().any(|a| a.as_str() == action) {
                log::warn!("proposer suggested illegal action {action:?}, dropping");
                continue;
            }
            if actions.contains(&action) {
                continue;
            }
            actions.push(action);
            if actions.len() == self.cfg.branch {
                break;
            }
        }
        self.cache.insert(key, CacheEntry::Propose(actions.clone()));
        Ok(actions)
    }

    fn simulate(
        &mut self,
        obs: &str,
        history: &str,
        action: &str,
    ) -> Result<SimulateStepResult, PlannerError> {
        let key = cache_key("simulate", obs, Some(action), history, &self.digest);
        if let Some(CacheEntry::Simulate(sim)) = self.cache.get(&key) {
            return Ok(sim.clone());
        }
        let prompt = render_simulate_step(self.env_description, &self.facts, obs, history, action);
        let call = LlmCall::new(FunctionKind::SimulateStep, prompt, PLANNER_TEMPERATURE);
        let sim = self.backend.complete(&call)?.expect_simulate()?;
        self.cache.insert(key, CacheEntry::Simulate(sim.clone()));
        Ok(sim)
    }

    fn value_estimate(&mut self, obs: &str, history: &str) -> Result<f64, PlannerError> {
        let key = cache_key("value", obs, None, history, &self.digest);
        if let Some(CacheEntry::Value(v)) = self.cache.get(&key) {
            return Ok(*v);
        }
        let prompt = render_estimate_value(
            self.env_description,
            &self.facts,
            obs,
            history,
            self.cfg.gamma,
        );
        let call = LlmCall::new(FunctionKind::EstimateValue, prompt, PLANNER_TEMPERATURE);
        let value = self.backend.complete(&call)?.expect_value()?.value;
        self.cache.insert(key, CacheEntry::Value(value));
        Ok(value)
    }
}
