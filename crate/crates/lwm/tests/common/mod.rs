//! Shared helpers for integration tests: a deliberately naive reference
//! planner and the canonical facts-only learning run.

use lwm::agents::{Agent, LwmAgent};
use lwm::core::{ActionName, HistoryBuffer, HistoryKind, Observation};
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};
use lwm::harness::RunRecord;
use lwm::llm::prompts::{
    render_estimate_value, render_propose_actions, render_simulate_step,
};
use lwm::llm::{
    Backend, FactVisibility, FunctionKind, LlmCall, OracleBackend, OracleModel,
    SimulateStepResult, PLANNER_TEMPERATURE,
};
use lwm::planner::PlanConfig;

/// Reference planner that re-derives the lookahead recurrence with no
/// memoization, no terminal-set shortcut, and no shared state. Every node
/// issues fresh backend calls, so agreement with the production planner
/// checks the backup logic rather than the plumbing.
pub struct BruteForcePlanner<'a, B: Backend> {
    pub backend: &'a B,
    pub env_description: &'a str,
    pub allowed: &'a [ActionName],
    pub facts: Vec<String>,
    pub cfg: PlanConfig,
}

impl<'a, B: Backend> BruteForcePlanner<'a, B> {
    fn propose(&self, obs: &str, history: &str) -> Vec<String> {
        let prompt = render_propose_actions(
            self.env_description,
            &self.facts,
            obs,
            history,
            self.cfg.branch,
            self.allowed,
        );
        let call = LlmCall::new(FunctionKind::ProposeActions, prompt, PLANNER_TEMPERATURE);
        let result = self
            .backend
            .complete(&call)
            .expect("oracle propose")
            .expect_propose()
            .expect("propose payload");
        let mut actions: Vec<String> = Vec::new();
        for action in result.actions {
            let legal = self.allowed.iter().any(|a| a.as_str() == action);
            if legal && !actions.contains(&action) {
                actions.push(action);
            }
            if actions.len() == self.cfg.branch {
                break;
            }
        }
        actions
    }

    fn simulate(&self, obs: &str, history: &str, action: &str) -> SimulateStepResult {
        let prompt =
            render_simulate_step(self.env_description, &self.facts, obs, history, action);
        let call = LlmCall::new(FunctionKind::SimulateStep, prompt, PLANNER_TEMPERATURE);
        self.backend
            .complete(&call)
            .expect("oracle simulate")
            .expect_simulate()
            .expect("simulate payload")
    }

    fn estimate(&self, obs: &str, history: &str) -> f64 {
        let prompt = render_estimate_value(
            self.env_description,
            &self.facts,
            obs,
            history,
            self.cfg.gamma,
        );
        let call = LlmCall::new(FunctionKind::EstimateValue, prompt, PLANNER_TEMPERATURE);
        self.backend
            .complete(&call)
            .expect("oracle estimate")
            .expect_value()
            .expect("value payload")
            .value
    }

    fn q(&self, obs: &str, history: &HistoryBuffer, action: &str, depth: u32) -> f64 {
        let sim = self.simulate(obs, &history.render(), action);
        let v_next = if sim.done {
            0.0
        } else {
            let mut child = history.clone();
            child.push(HistoryKind::Act, action).expect("history line");
            child
                .push(HistoryKind::Obs, &sim.next_observation)
                .expect("history line");
            self.value(&sim.next_observation, &child, depth - 1)
        };
        sim.reward - self.cfg.lambda_step + self.cfg.gamma * v_next
    }

    fn value(&self, obs: &str, history: &HistoryBuffer, depth: u32) -> f64 {
        if depth == 0 {
            return self.estimate(obs, &history.render());
        }
        let proposals = self.propose(obs, &history.render());
        if proposals.is_empty() {
            return self.estimate(obs, &history.render());
        }
        proposals
            .iter()
            .map(|a| self.q(obs, history, a, depth))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Root decision: argmax Q over the proposals, first proposal winning
    /// ties. Returns `None` when the proposer offers nothing.
    pub fn plan(&self, obs: &Observation, history: &HistoryBuffer) -> Option<String> {
        let proposals = self.propose(obs.as_str(), &history.render());
        let mut best: Option<(f64, String)> = None;
        for action in proposals {
            let q = self.q(obs.as_str(), history, &action, self.cfg.depth);
            if best.as_ref().is_none_or(|(b, _)| q > *b) {
                best = Some((q, action));
            }
        }
        best.map(|(_, a)| a)
    }
}

/// One budgeted facts-only learning run on the reference lake, keeping the
/// per-episode fact history alongside the run record.
pub struct CaseStudy {
    pub record: RunRecord,
    /// Fact memory contents after each episode, in episode order.
    pub facts_after_episode: Vec<Vec<String>>,
}

/// Run the learning agent with the facts-only oracle on the reference 4x4
/// lake: depth 3, branch 4, gamma 0.99, step penalty 0.01, budget 300.
pub fn run_case_study(seed: u64, budget: usize) -> CaseStudy {
    let board = reference_lake();
    let mut env = FrozenLakeEnv::new(board.clone());
    let spec = env.spec().clone();
    let backend = OracleBackend::new(
        OracleModel::FrozenLake(board),
        FactVisibility::FactsOnly,
    );
    let mut agent = LwmAgent::new(backend, &spec, PlanConfig::default(), seed).unwrap();

    let mut episodes = Vec::new();
    let mut facts_after_episode = Vec::new();
    let mut steps_used = 0usize;
    while steps_used < budget {
        let mut obs = env.reset();
        agent.begin_episode(&obs).unwrap();
        let mut buffer = lwm::core::EpisodeBuffer::new();
        loop {
            let action = agent.act(&obs).unwrap();
            let result = env.step(&action).unwrap();
            steps_used += 1;
            let transition = lwm::core::Transition {
                obs: obs.clone(),
                action,
                reward: result.reward,
                next_obs: result.obs.clone(),
                done: result.done,
            };
            agent.observe(&transition).unwrap();
            buffer.push(transition);
            obs = result.obs;
            if result.done || env.truncated() || steps_used == budget {
                break;
            }
        }
        agent.end_episode(&buffer).unwrap();
        facts_after_episode.push(agent.memory().texts());
        episodes.push(buffer);
    }

    let cumulative_return = episodes.iter().map(|e| e.total_reward).sum();
    let record = RunRecord {
        agent: agent.name().to_string(),
        env: spec.name.clone(),
        seed,
        step_budget: budget,
        episodes,
        cumulative_return,
        steps_per_success: None,
    };
    CaseStudy {
        record,
        facts_after_episode,
    }
}
