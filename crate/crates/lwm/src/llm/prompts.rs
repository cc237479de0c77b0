//! User-prompt templates for every structured call.
//!
//! Prompts embed the complete call state (environment description, fact
//! list, observation, history), so two calls with equal prompts are the
//! same logical query. Golden tests pin the rendered output byte for byte;
//! the deterministic oracle backend parses these exact layouts back out.

use crate::core::ActionName;

/// Render a fact or lesson list as a compact single-line JSON array.
pub fn string_list_json(items: &[String]) -> String {
    serde_json::to_string(items).expect("string list serializes")
}

/// Render allowed actions as a compact single-line JSON array.
pub fn action_list_json(actions: &[ActionName]) -> String {
    let names: Vec<&str> = actions.iter().map(|a| a.as_str()).collect();
    serde_json::to_string(&names).expect("action list serializes")
}

/// Shortest decimal form of the discount factor, e.g. `0.99`.
pub fn gamma_str(gamma: f64) -> String {
    format!("{gamma}")
}

pub fn render_propose_actions(
    env_description: &str,
    facts: &[String],
    observation: &str,
    history: &str,
    branch_factor: usize,
    allowed: &[ActionName],
) -> String {
    format!(
        "You are an next best action proposing agent, task with solving the given environment \
defined below optimally. Your task is to propose up to {k} most likely next best unique actions \
to try next that make the agent solve the environment task optimally.\n\
\n\
Environment description:\n\
{env}\n\
\n\
Atomic facts that help to predict next state value / next reward accurately (at beginning of episode):\n\
{facts}\n\
\n\
Current Observation:\n\
{obs}\n\
\n\
Recent history (old->new):\n\
{history}\n\
\n\
You now see Observation: {obs}. Now reason through (using the atomic facts, and recent \
observation and action history), then give propose up to {k} most likely next best unique \
actions to try next that make the agent solve the environment task optimally, each from \
{allowed}. You will call the function propose_actions to do this.",
        k = branch_factor,
        env = env_description,
        facts = string_list_json(facts),
        obs = observation,
        history = history,
        allowed = action_list_json(allowed),
    )
}

pub fn render_simulate_step(
    env_description: &str,
    facts: &[String],
    observation: &str,
    history: &str,
    action: &str,
) -> String {
    format!(
        "You are a latent world model for the given environment defined below. Given the current \
observation and an action, predict: the next (perhaps latent) observation, immediate reward and \
done flag (whether the resulting state ends the episode). You must be as accurate as possible, \
as your output is used as a planner to solve the given environment optimally.\n\
\n\
Environment description:\n\
{env}\n\
\n\
Atomic facts that help to predict next state value / next reward accurately (at beginning of episode):\n\
{facts}\n\
\n\
Current Observation:\n\
{obs}\n\
\n\
Recent history (old->new):\n\
{history}\n\
\n\
Given action to simulate the next observation and reward for:\n\
{action}\n\
\n\
You now see Observation: {obs}. Now reason through (using the atomic facts, and recent \
observation and action history), and predict the next (perhaps latent) observation, immediate \
reward, and done flag (whether the resulting state ends the episode) after taking the given \
action of {action}. You must be as accurate as possible (for the predicted reward, and ensure \
your predicted next observation has enough observation information to predict future rewards for \
the given task in the given environment), as your output is used as a planner to solve the given \
environment optimally. You will call the function simulate_step to do this.",
        env = env_description,
        facts = string_list_json(facts),
        obs = observation,
        history = history,
        action = action,
    )
}

pub fn render_estimate_value(
    env_description: &str,
    facts: &[String],
    observation: &str,
    history: &str,
    gamma: f64,
) -> String {
    format!(
        "You are a state value function estimator for the given environment defined below. You \
must predict the current cumulative future reward from the current (perhaps latent) observation. \
You must be as accurate as possible, as your output is used as a planner to solve the given \
environment optimally. The environment's discount factor is {gamma}.\n\
\n\
Environment description:\n\
{env}\n\
\n\
Atomic facts that help to predict next state value / next reward accurately (at beginning of episode):\n\
{facts}\n\
\n\
Current Observation (to predict the current cumulative future reward for):\n\
{obs}\n\
\n\
Recent history (old->new):\n\
{history}\n\
\n\
You now see Observation: {obs}. Now reason through (using the atomic facts, and recent \
observation and action history), and predict the current cumulative future reward from the \
current (perhaps latent) observation. You must be as accurate as possible, as your output is \
used as a planner to solve the given environment optimally. The environment's discount factor \
is {gamma}. You will call the function estimate_value to do this.",
        gamma = gamma_str(gamma),
        env = env_description,
        facts = string_list_json(facts),
        obs = observation,
        history = history,
    )
}

pub fn render_fact_extraction(
    env_description: &str,
    trajectory_summary: &str,
    known_facts: &[String],
) -> String {
    format!(
        "You are a LLM fact extraction agent. Operating in the following environment defined \
below. Your task is to extract atomic facts that you did not know already to help with \
predicting the next state value / next reward, such that if you had this fact you would have \
improved your prediction for the next state value, when being a world model (that is be able to \
complete the task optimally in the minimum number of steps, therefore extract key information \
that helps you).\n\
\n\
ENVIRONMENT DESCRIPTION:\n\
{env}\n\
\n\
{summary}\n\
\n\
We already know and have the following facts (ensure you do not duplicate them) (at beginning of episode):\n\
{facts}\n\
\n\
Now respond with minimal new atomic facts (at beginning of episode) that you did not already \
know, for the rest of the states assume you already know them. Make facts as concise as \
possible. Optimize them for other agents reading and decision making given a current state. \
Never duplicate the facts if they already exist within our following fact set. Do not include \
any other text or reasoning, just the facts. If no new facts just return empty string. Use \
function \"fact_extraction\" to do this now.",
        env = env_description,
        summary = trajectory_summary,
        facts = string_list_json(known_facts),
    )
}

pub fn render_fact_redundancy_remover(env_description: &str, facts: &[String]) -> String {
    format!(
        "Remove any redundant facts that are already included in the list of all facts given to \
you. You will also always be given the environment description, therefore you can use that to \
help you remove any redundant facts. Always keep all exhaustive factual knowledge, just remove \
any duplicate facts, or redundant information already contained within the environment \
description. You optimize the facts so they can be read by another LLM agent using them for \
being a world model of the environment (where the agent has to simulate given a state,action to \
predict the next state, next reward and terminal state). Remove any redundancy, otherwise copy \
over the existing facts verbatim.\n\
\n\
ENVIRONMENT DESCRIPTION:\n\
{env}\n\
\n\
Facts (at beginning of episode):\n\
{facts}\n\
\n\
List of all facts (at beginning of episode) that you did not know already (not contained within \
the environment description) to help with predicting the next state value / next reward, such \
that if you had this fact you would have improved your prediction for the next state value, \
when being a world model. Optimize them for other agents reading and decision making given a \
current state. Use function \"fact_redundancy_remover\" to do this now.",
        env = env_description,
        facts = string_list_json(facts),
    )
}

/// Optional knowledge block for the thought-then-act prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactKnowledge<'a> {
    None,
    Lessons(&'a [String]),
    Facts(&'a [String]),
}

pub fn render_react_step(
    env_description: &str,
    knowledge: ReactKnowledge<'_>,
    observation: &str,
    history: &str,
    allowed: &[ActionName],
) -> String {
    let knowledge_block = match knowledge {
        ReactKnowledge::None => String::new(),
        ReactKnowledge::Lessons(lessons) => format!(
            "Lessons learned from previous episodes (oldest first):\n{}\n\n",
            string_list_json(lessons)
        ),
        ReactKnowledge::Facts(facts) => format!(
            "Atomic facts that help to predict next state value / next reward accurately (at beginning of episode):\n{}\n\n",
            string_list_json(facts)
        ),
    };
    format!(
        "You are a reasoning and acting agent, tasked with solving the given environment defined \
below optimally. At each step you think through the situation, then choose exactly one action.\n\
\n\
Environment description:\n\
{env}\n\
\n\
{knowledge}Current Observation:\n\
{obs}\n\
\n\
Recent history (old->new):\n\
{history}\n\
\n\
You now see Observation: {obs}. Now reason through what to do next (using the recent observation \
and action history), then choose exactly one action from {allowed}. You will call the function \
react_step to do this.",
        env = env_description,
        knowledge = knowledge_block,
        obs = observation,
        history = history,
        allowed = action_list_json(allowed),
    )
}

pub fn render_reflect(
    env_description: &str,
    trajectory_summary: &str,
    lessons: &[String],
) -> String {
    format!(
        "You are a self-reflection agent, reviewing the completed episode below to improve \
future episodes in the given environment.\n\
\n\
Environment description:\n\
{env}\n\
\n\
{summary}\n\
\n\
Lessons learned from previous episodes (oldest first):\n\
{lessons}\n\
\n\
Now respond with one new concise, actionable lesson of at most 20 words that would most improve \
future episodes. Do not repeat a lesson that is already in the list. Use function \"reflect\" \
to do this now.",
        env = env_description,
        summary = trajectory_summary,
        lessons = string_list_json(lessons),
    )
}
