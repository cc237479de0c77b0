//! Byte-exact pins of every rendered prompt template. Any wording or
//! whitespace drift in `llm::prompts` fails here against the checked-in
//! golden files.

use lwm::core::ActionName;
use lwm::llm::prompts::{
    render_estimate_value, render_fact_extraction, render_fact_redundancy_remover,
    render_propose_actions, render_react_step, render_reflect, render_simulate_step,
    ReactKnowledge,
};

const ENV: &str = "A 2x2 frozen lake. Actions move one cell; holes end the episode with reward \
-1; the goal pays +1.";
const OBS: &str = "You are at (0, 0) on start.";
const HISTORY: &str = "Obs: You are at (0, 0) on start.";
const SUMMARY: &str = "Episode summary:\nObs: You are at (0, 0) on start.\nAct: down\nObs: You \
are at (1, 0) on ice.\nOutcome: FAILURE (Total Reward: -1.0)";

fn actions() -> Vec<ActionName> {
    ["up", "down", "left", "right"]
        .iter()
        .map(|a| ActionName::new(*a).unwrap())
        .collect()
}

fn facts() -> Vec<String> {
    vec![
        "(0, 1) is a hole.".to_string(),
        "(1, 1) is the goal.".to_string(),
    ]
}

fn lessons() -> Vec<String> {
    vec!["Avoid moving into holes; plan a route around them.".to_string()]
}

#[test]
fn propose_actions_prompt_is_pinned() {
    assert_eq!(
        render_propose_actions(ENV, &facts(), OBS, HISTORY, 4, &actions()),
        include_str!("golden/propose_actions.txt")
    );
}

#[test]
fn simulate_step_prompt_is_pinned() {
    assert_eq!(
        render_simulate_step(ENV, &facts(), OBS, HISTORY, "down"),
        include_str!("golden/simulate_step.txt")
    );
}

#[test]
fn estimate_value_prompt_is_pinned() {
    assert_eq!(
        render_estimate_value(ENV, &facts(), OBS, HISTORY, 0.99),
        include_str!("golden/estimate_value.txt")
    );
}

#[test]
fn fact_extraction_prompt_is_pinned() {
    assert_eq!(
        render_fact_extraction(ENV, SUMMARY, &facts()),
        include_str!("golden/fact_extraction.txt")
    );
}

#[test]
fn fact_redundancy_remover_prompt_is_pinned() {
    assert_eq!(
        render_fact_redundancy_remover(ENV, &facts()),
        include_str!("golden/fact_redundancy_remover.txt")
    );
}

#[test]
fn react_step_prompts_are_pinned() {
    assert_eq!(
        render_react_step(ENV, ReactKnowledge::None, OBS, HISTORY, &actions()),
        include_str!("golden/react_step_plain.txt")
    );
    assert_eq!(
        render_react_step(
            ENV,
            ReactKnowledge::Lessons(&lessons()),
            OBS,
            HISTORY,
            &actions()
        ),
        include_str!("golden/react_step_lessons.txt")
    );
    assert_eq!(
        render_react_step(
            ENV,
            ReactKnowledge::Facts(&facts()),
            OBS,
            HISTORY,
            &actions()
        ),
        include_str!("golden/react_step_facts.txt")
    );
}

#[test]
fn reflect_prompt_is_pinned() {
    assert_eq!(
        render_reflect(ENV, SUMMARY, &lessons()),
        include_str!("golden/reflect.txt")
    );
}
