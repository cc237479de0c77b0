//! Episode-by-episode learning on the reference frozen lake.
//!
//! The agent starts knowing nothing about the board: the facts-only oracle
//! answers simulator queries from the agent's own fact memory, so hidden
//! holes look like safe ice until one is stepped in. Each failure adds a
//! hole fact, and the plans improve until the agent walks the six-step
//! safe path every time.

use lwm::agents::{Agent, LwmAgent};
use lwm::core::{EpisodeBuffer, Transition};
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};
use lwm::llm::{FactVisibility, OracleBackend, OracleModel};
use lwm::planner::PlanConfig;

fn main() {
    let board = reference_lake();
    println!("Board:\n{}\n", board.render_fixture());

    let mut env = FrozenLakeEnv::new(board.clone());
    let spec = env.spec().clone();
    let backend = OracleBackend::new(
        OracleModel::FrozenLake(board),
        FactVisibility::FactsOnly,
    );
    let mut agent = LwmAgent::new(backend, &spec, PlanConfig::default(), 0).unwrap();

    let budget = 300usize;
    let mut steps_used = 0usize;
    let mut episode = 0u32;
    let mut known_facts = 0usize;
    println!("{:<9} {:>5} {:>7}  {:<9} new facts", "episode", "steps", "return", "outcome");
    while steps_used < budget {
        episode += 1;
        let mut obs = env.reset();
        agent.begin_episode(&obs).unwrap();
        let mut buffer = EpisodeBuffer::new();
        loop {
            let action = agent.act(&obs).unwrap();
            let result = env.step(&action).unwrap();
            steps_used += 1;
            let transition = Transition {
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

        let facts = agent.memory().texts();
        let fresh: Vec<&String> = facts.iter().skip(known_facts).collect();
        known_facts = facts.len();
        let outcome = if buffer.total_reward >= 0.99 {
            "success"
        } else if buffer.ended_by_env() {
            "fell in"
        } else {
            "truncated"
        };
        println!(
            "{:<9} {:>5} {:>7.2}  {:<9} {:?}",
            episode,
            buffer.transitions.len(),
            buffer.total_reward,
            outcome,
            fresh
        );
    }

    println!("\n{} episodes in a {budget}-step budget.", episode);
    println!("Final fact memory: {:?}", agent.memory().texts());
}
