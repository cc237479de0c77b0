//! Deterministic oracle backend.
//!
//! A drop-in completion provider bound to an environment model. It answers
//! every structured call by parsing the rendered user prompt back into a
//! query, so it knows exactly what a live model would know: the prompt. In
//! `FactsOnly` mode it additionally ignores its ground-truth model wherever
//! facts should speak instead, simulating a belief world in which every
//! property not asserted by a fact takes its default value (FrozenLake:
//! unlisted cells are ice; crafter: unlisted tiles are grass).

use super::{
    Backend, EstimateValueResult, FactExtractionResult, FactRedundancyRemoverResult,
    FunctionKind, LlmCall, LlmError, LlmResult, ProposeActionsResult, ReactStepResult,
    ReflectResult, SimulateStepResult,
};
use crate::core::canonicalize_fact_text;
use crate::envs::crafter::{
    self, render_observation, step_dynamics, torus_neighbor, CrafterState, CrafterWorld, Tile,
};
use crate::envs::frozen_lake::{
    self, apply_move, belief_board, FrozenLakeBoard, Terrain,
};

/// How much of the ground-truth model the oracle may consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactVisibility {
    /// Answer from the true environment model.
    Full,
    /// Answer from the belief world induced by the prompt's fact list.
    FactsOnly,
}

/// The environment model the oracle is bound to.
#[derive(Debug, Clone)]
pub enum OracleModel {
    FrozenLake(FrozenLakeBoard),
    Crafter(CrafterWorld),
}

/// Fixed action enumeration the oracle proposes from on FrozenLake.
pub const LAKE_PROPOSAL_ORDER: [&str; 4] = ["right", "down", "left", "up"];
/// Fixed action enumeration the oracle proposes from on the crafter world.
pub const CRAFTER_PROPOSAL_ORDER: [&str; 8] = ["0", "1", "2", "3", "4", "5", "6", "7"];

#[derive(Debug, Clone)]
pub struct OracleBackend {
    model: OracleModel,
    visibility: FactVisibility,
    gamma: f64,
    lambda: f64,
}

impl OracleBackend {
    /// Bind an oracle with the default planning discount (0.99) and step
    /// penalty (0.01).
    pub fn new(model: OracleModel, visibility: FactVisibility) -> Self {
        Self::with_params(model, visibility, 0.99, 0.01)
    }

    /// `gamma` drives the greedy thought-then-act policy; value estimates
    /// honor the discount stated in the prompt. `lambda` is the agent-side
    /// step penalty the value stream internalizes.
    pub fn with_params(
        model: OracleModel,
        visibility: FactVisibility,
        gamma: f64,
        lambda: f64,
    ) -> Self {
        Self {
            model,
            visibility,
            gamma,
            lambda,
        }
    }

    pub fn visibility(&self) -> FactVisibility {
        self.visibility
    }

    fn proposal_order(&self) -> &'static [&'static str] {
        match self.model {
            OracleModel::FrozenLake(_) => &LAKE_PROPOSAL_ORDER,
            OracleModel::Crafter(_) => &CRAFTER_PROPOSAL_ORDER,
        }
    }

    fn propose(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let k = usize_after(&call.user, "propose up to ")?;
        let allowed = json_list_after(&call.user, "each from ")?;
        let actions: Vec<String> = self
            .proposal_order()
            .iter()
            .filter(|a| allowed.iter().any(|x| x == *a))
            .take(k)
            .map(|a| a.to_string())
            .collect();
        Ok(LlmResult::ProposeActions(ProposeActionsResult {
            thought: "oracle: fixed enumeration".into(),
            actions,
        }))
    }

    fn simulate(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let obs = section(&call.user, "Current Observation:")?;
        let action = section(
            &call.user,
            "Given action to simulate the next observation and reward for:",
        )?;
        let facts = string_list_section(&call.user, PLANNER_FACTS_MARKER)?;
        let (next_observation, reward, done) = match &self.model {
            OracleModel::FrozenLake(board) => {
                self.lake_simulate(board, obs, action, &facts)?
            }
            OracleModel::Crafter(world) => self.crafter_simulate(world, obs, action, &facts)?,
        };
        Ok(LlmResult::SimulateStep(SimulateStepResult {
            thought: "oracle: exact dynamics".into(),
            next_observation,
            reward,
            done,
        }))
    }

    fn estimate(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let obs = section(
            &call.user,
            "Current Observation (to predict the current cumulative future reward for):",
        )?;
        let facts = string_list_section(&call.user, PLANNER_FACTS_MARKER)?;
        let gamma = gamma_in(&call.user)?;
        let (thought, value) = match &self.model {
            OracleModel::FrozenLake(board) => (
                "oracle: value iteration",
                self.lake_value(board, obs, &facts, gamma)?,
            ),
            OracleModel::Crafter(world) => (
                "oracle: scripted plan",
                self.crafter_value(world, obs, &facts, gamma)?,
            ),
        };
        Ok(LlmResult::EstimateValue(EstimateValueResult {
            thought: thought.into(),
            value,
        }))
    }

    fn extract_facts(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let known = string_list_section(&call.user, KNOWN_FACTS_MARKER)?;
        let summary = parse_summary(&call.user)?;
        let raw = match &self.model {
            OracleModel::FrozenLake(_) => lake_facts_from_summary(&summary),
            OracleModel::Crafter(_) => crafter_facts_from_summary(&summary),
        };
        let known_canon: Vec<String> =
            known.iter().map(|f| canonicalize_fact_text(f)).collect();
        let mut new_facts = Vec::new();
        for fact in raw {
            let canon = canonicalize_fact_text(&fact);
            if known_canon.contains(&canon) || new_facts.contains(&fact) {
                continue;
            }
            new_facts.push(fact);
        }
        Ok(LlmResult::FactExtraction(FactExtractionResult {
            thought: "oracle: trajectory scan".into(),
            new_facts,
        }))
    }

    fn compress_facts(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let facts = string_list_section(&call.user, COMPRESS_FACTS_MARKER)?;
        let mut seen = Vec::new();
        let mut all_facts = Vec::new();
        for fact in facts {
            let canon = canonicalize_fact_text(&fact);
            if seen.contains(&canon) {
                continue;
            }
            seen.push(canon);
            all_facts.push(fact);
        }
        Ok(LlmResult::FactRedundancyRemover(FactRedundancyRemoverResult {
            thought: "oracle: exact dedup".into(),
            all_facts,
        }))
    }

    fn react(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let obs = section(&call.user, "Current Observation:")?;
        let facts = match string_list_section(&call.user, PLANNER_FACTS_MARKER) {
            Ok(list) => list,
            Err(_) => Vec::new(),
        };
        let allowed = json_list_after(&call.user, "choose exactly one action from ")?;
        let action = match &self.model {
            OracleModel::FrozenLake(board) => self.lake_greedy(board, obs, &facts)?,
            OracleModel::Crafter(world) => self.crafter_greedy(world, obs, &facts)?,
        };
        if !allowed.iter().any(|a| a == &action) {
            return Err(LlmError::Contract(format!(
                "oracle policy chose {action:?}, not in the allowed list"
            )));
        }
        Ok(LlmResult::ReactStep(ReactStepResult {
            thought: "oracle: greedy policy".into(),
            action,
        }))
    }

    fn reflect(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        let summary = parse_summary(&call.user)?;
        let lesson = match &self.model {
            OracleModel::FrozenLake(_) => lake_lesson(&summary),
            OracleModel::Crafter(_) => crafter_lesson(&summary),
        };
        Ok(LlmResult::Reflect(ReflectResult {
            thought: "oracle: templated lesson".into(),
            lesson,
        }))
    }

    fn lake_belief(&self, board: &FrozenLakeBoard, facts: &[String]) -> FrozenLakeBoard {
        match self.visibility {
            FactVisibility::Full => board.clone(),
            FactVisibility::FactsOnly => {
                let holes: Vec<(usize, usize)> = facts
                    .iter()
                    .filter_map(|f| parse_lake_fact(f))
                    .filter(|(_, t)| *t == Terrain::Hole)
                    .map(|(pos, _)| pos)
                    .collect();
                belief_board(board.size(), &holes)
            }
        }
    }

    fn lake_simulate(
        &self,
        board: &FrozenLakeBoard,
        obs: &str,
        action: &str,
        facts: &[String],
    ) -> Result<(String, f64, bool), LlmError> {
        let ((r, c), terrain) = frozen_lake::parse_observation(obs)
            .ok_or_else(|| LlmError::Simulation(format!("unparseable observation {obs:?}")))?;
        if matches!(terrain, Terrain::Hole | Terrain::Goal) {
            return Ok((obs.to_string(), 0.0, true));
        }
        let belief = self.lake_belief(board, facts);
        if r >= belief.size() || c >= belief.size() {
            return Err(LlmError::Simulation(format!(
                "position ({r}, {c}) outside the {n}x{n} grid",
                n = belief.size()
            )));
        }
        let (nr, nc) = apply_move(belief.size(), (r, c), action)
            .map_err(|e| LlmError::Simulation(e.to_string()))?;
        let dest = belief.terrain(nr, nc);
        let reward = match dest {
            Terrain::Goal => 1.0,
            Terrain::Hole => -1.0,
            _ => 0.0,
        };
        let done = matches!(dest, Terrain::Goal | Terrain::Hole);
        Ok((belief.observe(nr, nc).as_str().to_string(), reward, done))
    }

    fn lake_value(
        &self,
        board: &FrozenLakeBoard,
        obs: &str,
        facts: &[String],
        gamma: f64,
    ) -> Result<f64, LlmError> {
        let ((r, c), terrain) = frozen_lake::parse_observation(obs)
            .ok_or_else(|| LlmError::Estimation(format!("unparseable observation {obs:?}")))?;
        if matches!(terrain, Terrain::Hole | Terrain::Goal) {
            return Ok(0.0);
        }
        let belief = self.lake_belief(board, facts);
        let values = lake_optimal_values(&belief, gamma, self.lambda);
        Ok(values[r * belief.size() + c])
    }

    fn lake_greedy(
        &self,
        board: &FrozenLakeBoard,
        obs: &str,
        facts: &[String],
    ) -> Result<String, LlmError> {
        let ((r, c), terrain) = frozen_lake::parse_observation(obs)
            .ok_or_else(|| LlmError::Simulation(format!("unparseable observation {obs:?}")))?;
        if matches!(terrain, Terrain::Hole | Terrain::Goal) {
            return Ok(LAKE_PROPOSAL_ORDER[0].to_string());
        }
        let belief = self.lake_belief(board, facts);
        let n = belief.size();
        let values = lake_optimal_values(&belief, self.gamma, self.lambda);
        let mut best: Option<(f64, &str)> = None;
        for a in LAKE_PROPOSAL_ORDER {
            let (nr, nc) = apply_move(n, (r, c), a).expect("fixed order is legal");
            let dest = belief.terrain(nr, nc);
            let reward = match dest {
                Terrain::Goal => 1.0,
                Terrain::Hole => -1.0,
                _ => 0.0,
            };
            let v_next = if matches!(dest, Terrain::Goal | Terrain::Hole) {
                0.0
            } else {
                values[nr * n + nc]
            };
            let q = reward - self.lambda + self.gamma * v_next;
            if best.is_none() || q > best.unwrap().0 {
                best = Some((q, a));
            }
        }
        Ok(best.expect("four actions scored").1.to_string())
    }

    fn crafter_belief(
        &self,
        world: &CrafterWorld,
        state: &CrafterState,
        visible: &crafter::VisibleTiles,
        facts: &[String],
    ) -> Vec<Tile> {
        let n = world.size();
        let mut tiles = match self.visibility {
            FactVisibility::Full => world.tiles().to_vec(),
            FactVisibility::FactsOnly => {
                let mut tiles = vec![Tile::Grass; n * n];
                for fact in facts {
                    if let Some(((r, c), tile)) = parse_crafter_fact(fact) {
                        if r < n && c < n {
                            tiles[r * n + c] = tile;
                        }
                    }
                }
                tiles
            }
        };
        // The observation's five visible tiles are fresher than both the
        // blueprint and the fact list (collection mutates the grid).
        let (r, c) = state.pos;
        if r < n && c < n {
            tiles[r * n + c] = visible[0];
            for (i, dir) in [0u8, 1, 2, 3].iter().enumerate() {
                let (nr, nc) = torus_neighbor(n, (r, c), *dir);
                tiles[nr * n + nc] = visible[i + 1];
            }
        }
        tiles
    }

    fn crafter_simulate(
        &self,
        world: &CrafterWorld,
        obs: &str,
        action: &str,
        facts: &[String],
    ) -> Result<(String, f64, bool), LlmError> {
        let (mut state, visible) = crafter::parse_observation(obs)
            .ok_or_else(|| LlmError::Simulation(format!("unparseable observation {obs:?}")))?;
        if state.iron_pickaxe {
            return Ok((obs.to_string(), 0.0, true));
        }
        let action_id: u8 = action
            .parse()
            .ok()
            .filter(|a| *a <= 7)
            .ok_or_else(|| LlmError::Simulation(format!("unknown action {action:?}")))?;
        let n = world.size();
        if state.pos.0 >= n || state.pos.1 >= n {
            return Err(LlmError::Simulation(format!(
                "position {:?} outside the {n}x{n} grid",
                state.pos
            )));
        }
        let mut tiles = self.crafter_belief(world, &state, &visible, facts);
        let (reward, done) = step_dynamics(n, &mut tiles, &mut state, action_id);
        let next = render_observation(n, &tiles, &state);
        Ok((next.as_str().to_string(), reward, done))
    }

    fn crafter_value(
        &self,
        world: &CrafterWorld,
        obs: &str,
        facts: &[String],
        gamma: f64,
    ) -> Result<f64, LlmError> {
        let (state, visible) = crafter::parse_observation(obs)
            .ok_or_else(|| LlmError::Estimation(format!("unparseable observation {obs:?}")))?;
        if state.iron_pickaxe {
            return Ok(0.0);
        }
        let n = world.size();
        let tiles = self.crafter_belief(world, &state, &visible, facts);
        match crafter_script(n, &tiles, &state) {
            Some(plan) => Ok(crafter_plan_value(n, &tiles, &state, &plan, gamma, self.lambda)),
            None => Ok(crafter_wander_value(gamma, self.lambda)),
        }
    }

    fn crafter_greedy(
        &self,
        world: &CrafterWorld,
        obs: &str,
        facts: &[String],
    ) -> Result<String, LlmError> {
        let (state, visible) = crafter::parse_observation(obs)
            .ok_or_else(|| LlmError::Simulation(format!("unparseable observation {obs:?}")))?;
        if state.iron_pickaxe {
            return Ok("0".to_string());
        }
        let n = world.size();
        let tiles = self.crafter_belief(world, &state, &visible, facts);
        Ok(match crafter_script(n, &tiles, &state) {
            Some(plan) => plan[0].to_string(),
            None => "0".to_string(),
        })
    }
}

impl Backend for OracleBackend {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        match call.function {
            FunctionKind::ProposeActions => self.propose(call),
            FunctionKind::SimulateStep => self.simulate(call),
            FunctionKind::EstimateValue => self.estimate(call),
            FunctionKind::FactExtraction => self.extract_facts(call),
            FunctionKind::FactRedundancyRemover => self.compress_facts(call),
            FunctionKind::ReactStep => self.react(call),
            FunctionKind::Reflect => self.reflect(call),
        }
    }

    fn label(&self) -> String {
        match self.visibility {
            FactVisibility::Full => "oracle-full".to_string(),
            FactVisibility::FactsOnly => "oracle-facts".to_string(),
        }
    }
}

const PLANNER_FACTS_MARKER: &str =
    "Atomic facts that help to predict next state value / next reward accurately (at beginning of episode):";
const KNOWN_FACTS_MARKER: &str =
    "We already know and have the following facts (ensure you do not duplicate them) (at beginning of episode):";
const COMPRESS_FACTS_MARKER: &str = "Facts (at beginning of episode):";

/// Text of the block that follows `marker` on its own line, up to the next
/// blank line.
fn section<'a>(prompt: &'a str, marker: &str) -> Result<&'a str, LlmError> {
    let tagged = format!("{marker}\n");
    let start = prompt
        .find(&tagged)
        .ok_or_else(|| LlmError::Contract(format!("prompt lacks section {marker:?}")))?
        + tagged.len();
    let rest = &prompt[start..];
    let end = rest.find("\n\n").unwrap_or(rest.len());
    Ok(rest[..end].trim_end())
}

fn string_list_section(prompt: &str, marker: &str) -> Result<Vec<String>, LlmError> {
    let body = section(prompt, marker)?;
    if body.is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str(body)
        .map_err(|e| LlmError::Contract(format!("bad list under {marker:?}: {e}")))
}

fn usize_after(prompt: &str, marker: &str) -> Result<usize, LlmError> {
    let idx = prompt
        .find(marker)
        .ok_or_else(|| LlmError::Contract(format!("prompt lacks {marker:?}")))?;
    let rest = &prompt[idx + marker.len()..];
    let token = rest
        .split_whitespace()
        .next()
        .ok_or_else(|| LlmError::Contract(format!("nothing follows {marker:?}")))?;
    token
        .parse()
        .map_err(|_| LlmError::Contract(format!("expected integer after {marker:?}, got {token:?}")))
}

fn json_list_after(prompt: &str, marker: &str) -> Result<Vec<String>, LlmError> {
    let idx = prompt
        .find(marker)
        .ok_or_else(|| LlmError::Contract(format!("prompt lacks {marker:?}")))?;
    let rest = &prompt[idx + marker.len()..];
    let end = rest
        .find("].")
        .ok_or_else(|| LlmError::Contract(format!("unterminated list after {marker:?}")))?;
    serde_json::from_str(&rest[..=end])
        .map_err(|e| LlmError::Contract(format!("bad list after {marker:?}: {e}")))
}

fn gamma_in(prompt: &str) -> Result<f64, LlmError> {
    const MARKER: &str = "The environment's discount factor is ";
    let idx = prompt
        .find(MARKER)
        .ok_or_else(|| LlmError::Contract("prompt states no discount factor".into()))?;
    let rest = &prompt[idx + MARKER.len()..];
    let token = rest
        .split_whitespace()
        .next()
        .ok_or_else(|| LlmError::Contract("discount factor missing".into()))?;
    let trimmed = token.strip_suffix('.').unwrap_or(token);
    trimmed
        .parse()
        .map_err(|_| LlmError::Contract(format!("bad discount factor {token:?}")))
}

/// One summary transition line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub obs: String,
    pub act: String,
    pub reward: f64,
    pub next_obs: String,
}

/// Parsed trajectory summary as found inside a prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSummary {
    pub outcome: String,
    pub total_reward: f64,
    pub lines: Vec<SummaryLine>,
}

fn parse_summary(prompt: &str) -> Result<ParsedSummary, LlmError> {
    let mut outcome = None;
    let mut total_reward = 0.0;
    let mut lines = Vec::new();
    for line in prompt.lines() {
        if let Some(rest) = line.strip_prefix("Outcome: ") {
            if outcome.is_some() {
                continue;
            }
            let cut = rest.rfind(" (Total Reward: ").ok_or_else(|| {
                LlmError::Contract(format!("malformed outcome line {line:?}"))
            })?;
            outcome = Some(rest[..cut].to_string());
            let reward_str = rest[cut + " (Total Reward: ".len()..]
                .strip_suffix(')')
                .ok_or_else(|| LlmError::Contract(format!("malformed outcome line {line:?}")))?;
            total_reward = reward_str
                .parse()
                .map_err(|_| LlmError::Contract(format!("bad total reward in {line:?}")))?;
        } else if let Some(parsed) = parse_summary_line(line) {
            lines.push(parsed);
        }
    }
    let outcome = outcome
        .ok_or_else(|| LlmError::Contract("prompt holds no trajectory summary".into()))?;
    Ok(ParsedSummary {
        outcome,
        total_reward,
        lines,
    })
}

fn parse_summary_line(line: &str) -> Option<SummaryLine> {
    let (index, rest) = line.split_once(". Obs: ")?;
    index.trim().parse::<usize>().ok()?;
    let (obs, rest) = rest.split_once(" | Act: ")?;
    let (act, rest) = rest.split_once(" | Reward: ")?;
    let (reward, next_obs) = rest.split_once(" | Next_Obs: ")?;
    Some(SummaryLine {
        obs: obs.to_string(),
        act: act.to_string(),
        reward: reward.trim().parse().ok()?,
        next_obs: next_obs.to_string(),
    })
}

/// Format a FrozenLake hole fact.
pub fn lake_hole_fact(r: usize, c: usize) -> String {
    format!("({r},{c}) is a hole.")
}

/// Format a FrozenLake ice fact.
pub fn lake_ice_fact(r: usize, c: usize) -> String {
    format!("({r},{c}) is ice.")
}

/// Format a FrozenLake goal fact.
pub fn lake_goal_fact(r: usize, c: usize) -> String {
    format!("({r},{c}) is the goal.")
}

/// Parse `(r,c) is a hole.` / `(r,c) is ice.` / `(r,c) is the goal.`.
pub fn parse_lake_fact(text: &str) -> Option<((usize, usize), Terrain)> {
    let canon = canonicalize_fact_text(text);
    let rest = canon.strip_prefix('(')?;
    let (r_str, rest) = rest.split_once(',')?;
    let (c_str, rest) = rest.split_once(')')?;
    let pos = (r_str.trim().parse().ok()?, c_str.trim().parse().ok()?);
    let terrain = match rest.trim() {
        "is a hole." => Terrain::Hole,
        "is ice." => Terrain::Ice,
        "is the goal." => Terrain::Goal,
        _ => return None,
    };
    Some((pos, terrain))
}

/// Format a crafter resource fact, e.g. `tree at (2,3).`.
pub fn crafter_resource_fact(tile: Tile, r: usize, c: usize) -> String {
    format!("{} at ({r},{c}).", tile.name())
}

/// Parse `<resource> at (r,c).`.
pub fn parse_crafter_fact(text: &str) -> Option<((usize, usize), Tile)> {
    let canon = canonicalize_fact_text(text);
    let (tile_name, rest) = canon.split_once(" at (")?;
    let tile = Tile::from_name(tile_name)?;
    if !tile.is_resource() {
        return None;
    }
    let (r_str, rest) = rest.split_once(',')?;
    let c_str = rest.strip_suffix(").")?;
    Some(((r_str.trim().parse().ok()?, c_str.trim().parse().ok()?), tile))
}

fn lake_facts_from_summary(summary: &ParsedSummary) -> Vec<String> {
    let mut facts = Vec::new();
    for line in &summary.lines {
        if let Some(((r, c), Terrain::Hole)) = frozen_lake::parse_observation(&line.next_obs) {
            facts.push(lake_hole_fact(r, c));
        }
    }
    if summary.outcome == "SUCCESS" {
        for line in &summary.lines {
            match frozen_lake::parse_observation(&line.next_obs) {
                Some(((r, c), Terrain::Ice)) => facts.push(lake_ice_fact(r, c)),
                Some(((r, c), Terrain::Goal)) => facts.push(lake_goal_fact(r, c)),
                _ => {}
            }
        }
    }
    facts
}

fn crafter_facts_from_summary(summary: &ParsedSummary) -> Vec<String> {
    let mut facts = Vec::new();
    let mut push_from = |obs: &str| {
        if let Some((state, visible)) = crafter::parse_observation(obs) {
            if visible[0].is_resource() {
                facts.push(crafter_resource_fact(visible[0], state.pos.0, state.pos.1));
            }
        }
    };
    if let Some(first) = summary.lines.first() {
        push_from(&first.obs);
    }
    for line in &summary.lines {
        push_from(&line.next_obs);
    }
    facts
}

fn lake_lesson(summary: &ParsedSummary) -> String {
    if summary.outcome == "SUCCESS" {
        return format!(
            "Reaching the goal in {} steps worked; reuse this route.",
            summary.lines.len()
        );
    }
    if let Some(last) = summary.lines.last() {
        if let Some(((r, c), Terrain::Hole)) = frozen_lake::parse_observation(&last.next_obs) {
            return format!("Avoid stepping onto ({r}, {c}); it is a hole.");
        }
    }
    "Plan a shorter route; the episode ended at the step limit.".to_string()
}

fn crafter_lesson(summary: &ParsedSummary) -> String {
    if summary.outcome == "SUCCESS" {
        "Crafting the iron pickaxe quickly maximizes reward; gather only what the recipes need."
            .to_string()
    } else {
        "Gather wood, then stone, then iron with fewer wasted steps.".to_string()
    }
}

/// Exact optimal values of every cell under the step-penalty reward stream
/// `r - lambda + gamma * V(next)`, terminal cells pinned to zero. Values
/// are computed by synchronous value-iteration sweeps to a 1e-13 residual.
pub fn lake_optimal_values(board: &FrozenLakeBoard, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = board.size();
    let terminal =
        |r: usize, c: usize| matches!(board.terrain(r, c), Terrain::Hole | Terrain::Goal);
    let reward_to = |r: usize, c: usize| match board.terrain(r, c) {
        Terrain::Goal => 1.0,
        Terrain::Hole => -1.0,
        _ => 0.0,
    };
    let mut values = vec![0.0f64; n * n];
    for _ in 0..200_000 {
        let mut next = vec![0.0f64; n * n];
        let mut residual = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if terminal(r, c) {
                    continue;
                }
                let mut best = f64::NEG_INFINITY;
                for action in ["up", "down", "left", "right"] {
                    let (nr, nc) = apply_move(n, (r, c), action).expect("known action");
                    let v_next = if terminal(nr, nc) {
                        0.0
                    } else {
                        values[nr * n + nc]
                    };
                    let q = reward_to(nr, nc) - lambda + gamma * v_next;
                    if q > best {
                        best = q;
                    }
                }
                next[r * n + c] = best;
                residual = residual.max((best - values[r * n + c]).abs());
            }
        }
        values = next;
        if residual <= 1e-13 {
            break;
        }
    }
    values
}

/// Deterministic plan that finishes the recipe chain from `state`:
/// gather 1 wood and 3 stone, craft the stone pickaxe, gather 3 iron, and
/// craft the iron pickaxe. Movement routes to the nearest needed resource
/// (toroidal Manhattan distance, lowest (row, column) tie-break), stepping
/// vertically then horizontally along the shorter wrap direction. Returns
/// `None` when the grid lacks a needed resource.
pub fn crafter_script(n: usize, tiles: &[Tile], state: &CrafterState) -> Option<Vec<u8>> {
    let mut tiles = tiles.to_vec();
    let mut st = *state;
    let mut plan = Vec::new();
    let push = |tiles: &mut [Tile], st: &mut CrafterState, plan: &mut Vec<u8>, a: u8| {
        step_dynamics(n, tiles, st, a);
        plan.push(a);
    };
    let mut guard = 0usize;
    while !st.iron_pickaxe {
        guard += 1;
        if guard > 16 * n * n {
            return None;
        }
        if st.stone_pickaxe {
            if st.iron >= 3 {
                push(&mut tiles, &mut st, &mut plan, 7);
            } else {
                route_and_collect(n, &mut tiles, &mut st, &mut plan, Tile::Iron)?;
            }
        } else if st.wood >= 1 && st.stone >= 3 {
            push(&mut tiles, &mut st, &mut plan, 6);
        } else if st.wood < 1 {
            route_and_collect(n, &mut tiles, &mut st, &mut plan, Tile::Tree)?;
        } else {
            route_and_collect(n, &mut tiles, &mut st, &mut plan, Tile::Stone)?;
        }
    }
    Some(plan)
}

fn route_and_collect(
    n: usize,
    tiles: &mut Vec<Tile>,
    st: &mut CrafterState,
    plan: &mut Vec<u8>,
    wanted: Tile,
) -> Option<()> {
    let target = nearest_tile(n, tiles, st.pos, wanted)?;
    let (vert_action, vert_count) = wrap_moves(n, st.pos.0, target.0, 1, 0);
    let (horiz_action, horiz_count) = wrap_moves(n, st.pos.1, target.1, 2, 3);
    for _ in 0..vert_count {
        step_dynamics(n, tiles, st, vert_action);
        plan.push(vert_action);
    }
    for _ in 0..horiz_count {
        step_dynamics(n, tiles, st, horiz_action);
        plan.push(horiz_action);
    }
    step_dynamics(n, tiles, st, 4);
    plan.push(4);
    Some(())
}

fn nearest_tile(
    n: usize,
    tiles: &[Tile],
    from: (usize, usize),
    wanted: Tile,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, (usize, usize))> = None;
    for r in 0..n {
        for c in 0..n {
            if tiles[r * n + c] != wanted {
                continue;
            }
            let dr = wrap_distance(n, from.0, r);
            let dc = wrap_distance(n, from.1, c);
            let dist = dr + dc;
            let candidate = (dist, (r, c));
            if best.is_none() || candidate < best.unwrap() {
                best = Some(candidate);
            }
        }
    }
    best.map(|(_, pos)| pos)
}

fn wrap_distance(n: usize, from: usize, to: usize) -> usize {
    let forward = (to + n - from) % n;
    let backward = (from + n - to) % n;
    forward.min(backward)
}

/// Steps and direction along one axis, preferring the shorter wrap and the
/// positive direction (south/east) on ties.
fn wrap_moves(n: usize, from: usize, to: usize, positive: u8, negative: u8) -> (u8, usize) {
    let forward = (to + n - from) % n;
    let backward = (from + n - to) % n;
    if forward <= backward {
        (positive, forward)
    } else {
        (negative, backward)
    }
}

/// Discounted return of replaying `plan` from `state`, with the agent-side
/// step penalty subtracted at every step.
pub fn crafter_plan_value(
    n: usize,
    tiles: &[Tile],
    state: &CrafterState,
    plan: &[u8],
    gamma: f64,
    lambda: f64,
) -> f64 {
    let mut tiles = tiles.to_vec();
    let mut st = *state;
    let mut value = 0.0;
    let mut discount = 1.0;
    for &action in plan {
        let (reward, _) = step_dynamics(n, &mut tiles, &mut st, action);
        value += discount * (reward - lambda);
        discount *= gamma;
    }
    value
}

/// Value of drifting forever at -1 reward per step when no completion plan
/// exists: the geometric sum of `-(1 + lambda)`.
pub fn crafter_wander_value(gamma: f64, lambda: f64) -> f64 {
    -(1.0 + lambda) / (1.0 - gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::crafter::reference_crafter;
    use crate::envs::frozen_lake::reference_lake;
    use crate::llm::prompts::{
        render_estimate_value, render_fact_extraction, render_fact_redundancy_remover,
        render_propose_actions, render_react_step, render_reflect, render_simulate_step,
        ReactKnowledge,
    };
    use crate::llm::PLANNER_TEMPERATURE;

    fn lake_oracle(visibility: FactVisibility) -> OracleBackend {
        OracleBackend::new(OracleModel::FrozenLake(reference_lake()), visibility)
    }

    fn crafter_oracle(visibility: FactVisibility) -> OracleBackend {
        OracleBackend::new(OracleModel::Crafter(reference_crafter()), visibility)
    }

    fn call(function: FunctionKind, user: String) -> LlmCall {
        LlmCall::new(function, user, PLANNER_TEMPERATURE)
    }

    fn lake_actions() -> Vec<crate::core::ActionName> {
        reference_lake().spec().allowed_actions
    }

    fn simulate(
        oracle: &OracleBackend,
        facts: &[String],
        obs: &str,
        action: &str,
    ) -> SimulateStepResult {
        let board = reference_lake();
        let prompt = render_simulate_step(&board.description(), facts, obs, "", action);
        oracle
            .complete(&call(FunctionKind::SimulateStep, prompt))
            .unwrap()
            .expect_simulate()
            .unwrap()
    }

    fn estimate(oracle: &OracleBackend, facts: &[String], obs: &str, gamma: f64) -> f64 {
        let board = reference_lake();
        let prompt = render_estimate_value(&board.description(), facts, obs, "", gamma);
        oracle
            .complete(&call(FunctionKind::EstimateValue, prompt))
            .unwrap()
            .expect_value()
            .unwrap()
            .value
    }

    #[test]
    fn full_simulation_replays_true_dynamics() {
        let oracle = lake_oracle(FactVisibility::Full);
        let hole = simulate(&oracle, &[], "You are at (0, 0) on start.", "down");
        assert_eq!(hole.next_observation, "You are at (1, 0) on hole.");
        assert_eq!(hole.reward, -1.0);
        assert!(hole.done);

        let goal = simulate(&oracle, &[], "You are at (2, 3) on ice.", "down");
        assert_eq!(goal.next_observation, "You are at (3, 3) on goal.");
        assert_eq!(goal.reward, 1.0);
        assert!(goal.done);
    }

    #[test]
    fn belief_simulation_defaults_unknown_cells_to_ice() {
        let oracle = lake_oracle(FactVisibility::FactsOnly);
        let blind = simulate(&oracle, &[], "You are at (0, 0) on start.", "down");
        assert_eq!(blind.next_observation, "You are at (1, 0) on ice.");
        assert_eq!(blind.reward, 0.0);
        assert!(!blind.done);

        let informed = simulate(
            &oracle,
            &[lake_hole_fact(1, 0)],
            "You are at (0, 0) on start.",
            "down",
        );
        assert_eq!(informed.next_observation, "You are at (1, 0) on hole.");
        assert_eq!(informed.reward, -1.0);
        assert!(informed.done);
    }

    #[test]
    fn value_estimates_match_value_iteration() {
        let full = lake_oracle(FactVisibility::Full);
        assert_eq!(estimate(&full, &[], "You are at (2, 3) on ice.", 0.99), 0.99);
        assert_eq!(estimate(&full, &[], "You are at (3, 3) on goal.", 0.99), 0.0);
        assert_eq!(estimate(&full, &[], "You are at (1, 0) on hole.", 0.99), 0.0);

        // All-ice belief board: six steps along any monotone path.
        let blind = lake_oracle(FactVisibility::FactsOnly);
        let gamma: f64 = 0.99;
        let lambda = 0.01;
        let mut expected = 0.0;
        let mut discount = 1.0;
        for step in 0..6 {
            let reward = if step == 5 { 1.0 } else { 0.0 };
            expected += discount * (reward - lambda);
            discount *= gamma;
        }
        let got = estimate(&blind, &[], "You are at (0, 0) on start.", gamma);
        assert!((got - expected).abs() < 1e-10, "got {got}, want {expected}");
    }

    #[test]
    fn complete_fact_set_matches_full_oracle_everywhere() {
        let board = reference_lake();
        let full = lake_oracle(FactVisibility::Full);
        let facts_only = lake_oracle(FactVisibility::FactsOnly);
        let all_facts: Vec<String> = board
            .holes()
            .iter()
            .map(|(r, c)| lake_hole_fact(*r, *c))
            .collect();
        for r in 0..4 {
            for c in 0..4 {
                if board.terrain(r, c) == Terrain::Hole {
                    continue;
                }
                let obs = board.observe(r, c);
                for action in LAKE_PROPOSAL_ORDER {
                    let a = simulate(&full, &[], obs.as_str(), action);
                    let b = simulate(&facts_only, &all_facts, obs.as_str(), action);
                    assert_eq!(a, b, "divergence at ({r}, {c}) {action}");
                }
                let va = estimate(&full, &[], obs.as_str(), 0.99);
                let vb = estimate(&facts_only, &all_facts, obs.as_str(), 0.99);
                assert_eq!(va, vb, "value divergence at ({r}, {c})");
            }
        }
    }

    #[test]
    fn proposals_follow_the_fixed_order() {
        let oracle = lake_oracle(FactVisibility::Full);
        let board = reference_lake();
        let prompt = render_propose_actions(
            &board.description(),
            &[],
            "You are at (0, 0) on start.",
            "",
            4,
            &lake_actions(),
        );
        let result = oracle
            .complete(&call(FunctionKind::ProposeActions, prompt))
            .unwrap()
            .expect_propose()
            .unwrap();
        assert_eq!(result.actions, vec!["right", "down", "left", "up"]);
        assert_eq!(result.thought, "oracle: fixed enumeration");

        let capped = render_propose_actions(
            &board.description(),
            &[],
            "You are at (0, 0) on start.",
            "",
            2,
            &lake_actions(),
        );
        let result = oracle
            .complete(&call(FunctionKind::ProposeActions, capped))
            .unwrap()
            .expect_propose()
            .unwrap();
        assert_eq!(result.actions, vec!["right", "down"]);
    }

    #[test]
    fn fact_extraction_reports_new_holes_only() {
        let oracle = lake_oracle(FactVisibility::FactsOnly);
        let board = reference_lake();
        let summary = "Outcome: FAILURE (Total Reward: -1.0)\n\
1. Obs: You are at (0, 0) on start. | Act: down | Reward: -1.0 | Next_Obs: You are at (1, 0) on hole.";
        let prompt = render_fact_extraction(&board.description(), summary, &[]);
        let result = oracle
            .complete(&call(FunctionKind::FactExtraction, prompt))
            .unwrap()
            .expect_facts()
            .unwrap();
        assert_eq!(result.new_facts, vec!["(1,0) is a hole."]);

        let known = vec!["(1,0) is a hole.".to_string()];
        let prompt = render_fact_extraction(&board.description(), summary, &known);
        let result = oracle
            .complete(&call(FunctionKind::FactExtraction, prompt))
            .unwrap()
            .expect_facts()
            .unwrap();
        assert!(result.new_facts.is_empty());
    }

    #[test]
    fn successful_episodes_also_yield_path_facts() {
        let oracle = lake_oracle(FactVisibility::FactsOnly);
        let board = reference_lake();
        let summary = "Outcome: SUCCESS (Total Reward: 1.0)\n\
1. Obs: You are at (0, 0) on start. | Act: right | Reward: 0.0 | Next_Obs: You are at (0, 1) on ice.\n\
2. Obs: You are at (0, 1) on ice. | Act: down | Reward: 0.0 | Next_Obs: You are at (1, 1) on ice.\n\
3. Obs: You are at (1, 1) on ice. | Act: right | Reward: 0.0 | Next_Obs: You are at (1, 2) on ice.\n\
4. Obs: You are at (1, 2) on ice. | Act: down | Reward: 0.0 | Next_Obs: You are at (2, 2) on ice.\n\
5. Obs: You are at (2, 2) on ice. | Act: right | Reward: 0.0 | Next_Obs: You are at (2, 3) on ice.\n\
6. Obs: You are at (2, 3) on ice. | Act: down | Reward: 1.0 | Next_Obs: You are at (3, 3) on goal.";
        let known = vec![
            "(1,0) is a hole.".to_string(),
            "(2,1) is a hole.".to_string(),
            "(0,2) is a hole.".to_string(),
            "(1,3) is a hole.".to_string(),
        ];
        let prompt = render_fact_extraction(&board.description(), summary, &known);
        let result = oracle
            .complete(&call(FunctionKind::FactExtraction, prompt))
            .unwrap()
            .expect_facts()
            .unwrap();
        assert_eq!(
            result.new_facts,
            vec![
                "(0,1) is ice.",
                "(1,1) is ice.",
                "(1,2) is ice.",
                "(2,2) is ice.",
                "(2,3) is ice.",
                "(3,3) is the goal.",
            ]
        );
    }

    #[test]
    fn compression_removes_exact_duplicates_only() {
        let oracle = lake_oracle(FactVisibility::FactsOnly);
        let board = reference_lake();
        let facts = vec![
            "(1,0) is a hole.".to_string(),
            "(1,0)  is a hole.".to_string(),
            "(2,1) is a hole.".to_string(),
        ];
        let prompt = render_fact_redundancy_remover(&board.description(), &facts);
        let result = oracle
            .complete(&call(FunctionKind::FactRedundancyRemover, prompt))
            .unwrap()
            .expect_compressed()
            .unwrap();
        assert_eq!(result.all_facts, vec!["(1,0) is a hole.", "(2,1) is a hole."]);
    }

    #[test]
    fn greedy_react_heads_for_the_goal() {
        let oracle = lake_oracle(FactVisibility::Full);
        let board = reference_lake();
        let prompt = render_react_step(
            &board.description(),
            ReactKnowledge::None,
            "You are at (2, 3) on ice.",
            "",
            &lake_actions(),
        );
        let result = oracle
            .complete(&call(FunctionKind::ReactStep, prompt))
            .unwrap()
            .expect_react()
            .unwrap();
        assert_eq!(result.action, "down");
    }

    #[test]
    fn reflect_produces_short_templated_lessons() {
        let oracle = lake_oracle(FactVisibility::Full);
        let board = reference_lake();
        let summary = "Outcome: FAILURE (Total Reward: -1.0)\n\
1. Obs: You are at (0, 0) on start. | Act: down | Reward: -1.0 | Next_Obs: You are at (1, 0) on hole.";
        let prompt = render_reflect(&board.description(), summary, &[]);
        let result = oracle
            .complete(&call(FunctionKind::Reflect, prompt))
            .unwrap()
            .expect_reflect()
            .unwrap();
        assert_eq!(result.lesson, "Avoid stepping onto (1, 0); it is a hole.");
        assert!(result.lesson.split_whitespace().count() <= 20);
    }

    #[test]
    fn crafter_simulation_and_value_complete_the_chain() {
        let oracle = crafter_oracle(FactVisibility::Full);
        let world = reference_crafter();
        let start = render_observation(
            world.size(),
            world.tiles(),
            &CrafterState {
                pos: world.start(),
                ..CrafterState::default()
            },
        );
        let prompt = render_simulate_step(&world.description(), &[], start.as_str(), "", "2");
        let step = oracle
            .complete(&call(FunctionKind::SimulateStep, prompt))
            .unwrap()
            .expect_simulate()
            .unwrap();
        assert!(step.next_observation.starts_with("You are on tree at (0, 1)."));
        assert_eq!(step.reward, -1.0);
        assert!(!step.done);

        let state = CrafterState {
            pos: world.start(),
            ..CrafterState::default()
        };
        let plan = crafter_script(world.size(), world.tiles(), &state).unwrap();
        assert_eq!(*plan.last().unwrap(), 7);
        let value = crafter_plan_value(world.size(), world.tiles(), &state, &plan, 0.99, 0.01);
        assert!(value > crafter_wander_value(0.99, 0.01));

        let prompt =
            render_estimate_value(&world.description(), &[], start.as_str(), "", 0.99);
        let estimated = oracle
            .complete(&call(FunctionKind::EstimateValue, prompt))
            .unwrap()
            .expect_value()
            .unwrap();
        assert_eq!(estimated.value, value);
    }

    #[test]
    fn crafter_belief_without_facts_sees_no_resources() {
        let oracle = crafter_oracle(FactVisibility::FactsOnly);
        let world = reference_crafter();
        let obs = "You are on grass at (2, 2). North: grass, South: grass, East: grass, West: grass. \
Inventory: wood=0, stone=0, iron=0. Tools: none.";
        let prompt = render_estimate_value(&world.description(), &[], obs, "", 0.99);
        let blind = oracle
            .complete(&call(FunctionKind::EstimateValue, prompt))
            .unwrap()
            .expect_value()
            .unwrap();
        assert_eq!(blind.value, crafter_wander_value(0.99, 0.01));

        let facts = vec![
            "tree at (0,1).".to_string(),
            "stone at (1,2).".to_string(),
            "stone at (1,4).".to_string(),
            "stone at (3,3).".to_string(),
            "iron at (2,1).".to_string(),
            "iron at (3,0).".to_string(),
            "iron at (4,2).".to_string(),
        ];
        let consistent = "You are on grass at (2, 2). North: stone, South: grass, East: tree, West: iron. \
Inventory: wood=0, stone=0, iron=0. Tools: none.";
        let prompt = render_estimate_value(&world.description(), &facts, consistent, "", 0.99);
        let informed = oracle
            .complete(&call(FunctionKind::EstimateValue, prompt))
            .unwrap()
            .expect_value()
            .unwrap();
        assert!(informed.value > blind.value);
    }

    #[test]
    fn crafter_facts_cover_visited_resources() {
        let oracle = crafter_oracle(FactVisibility::FactsOnly);
        let world = reference_crafter();
        let summary = "Outcome: FAILURE (step limit) (Total Reward: -4.0)\n\
1. Obs: You are on grass at (0, 0). North: water, South: grass, East: tree, West: water. Inventory: wood=0, stone=0, iron=0. Tools: none. | Act: 2 | Reward: -1.0 | Next_Obs: You are on tree at (0, 1). North: grass, South: grass, East: grass, West: grass. Inventory: wood=0, stone=0, iron=0. Tools: none.\n\
2. Obs: You are on tree at (0, 1). North: grass, South: grass, East: grass, West: grass. Inventory: wood=0, stone=0, iron=0. Tools: none. | Act: 4 | Reward: -1.0 | Next_Obs: You are on grass at (0, 1). North: grass, South: grass, East: grass, West: grass. Inventory: wood=1, stone=0, iron=0. Tools: none.";
        let prompt = render_fact_extraction(&world.description(), summary, &[]);
        let result = oracle
            .complete(&call(FunctionKind::FactExtraction, prompt))
            .unwrap()
            .expect_facts()
            .unwrap();
        assert_eq!(result.new_facts, vec!["tree at (0,1)."]);
    }

    #[test]
    fn fact_parsers_round_trip() {
        assert_eq!(
            parse_lake_fact(&lake_hole_fact(1, 0)),
            Some(((1, 0), Terrain::Hole))
        );
        assert_eq!(
            parse_lake_fact(&lake_ice_fact(2, 3)),
            Some(((2, 3), Terrain::Ice))
        );
        assert_eq!(
            parse_lake_fact(&lake_goal_fact(3, 3)),
            Some(((3, 3), Terrain::Goal))
        );
        assert_eq!(parse_lake_fact("(1, 0) is a hole."), Some(((1, 0), Terrain::Hole)));
        assert_eq!(parse_lake_fact("the pond is cold"), None);
        assert_eq!(
            parse_crafter_fact(&crafter_resource_fact(Tile::Iron, 4, 2)),
            Some(((4, 2), Tile::Iron))
        );
        assert_eq!(parse_crafter_fact("water at (0,4)."), None);
    }

    #[test]
    fn unparseable_observations_error_cleanly() {
        let oracle = lake_oracle(FactVisibility::Full);
        let board = reference_lake();
        let prompt = render_simulate_step(&board.description(), &[], "garbled", "", "down");
        assert!(matches!(
            oracle.complete(&call(FunctionKind::SimulateStep, prompt)),
            Err(LlmError::Simulation(_))
        ));
        let prompt = render_estimate_value(&board.description(), &[], "garbled", "", 0.99);
        assert!(matches!(
            oracle.complete(&call(FunctionKind::EstimateValue, prompt)),
            Err(LlmError::Estimation(_))
        ));
    }
}
