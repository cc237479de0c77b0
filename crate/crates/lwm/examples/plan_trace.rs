//! Look inside one planning call.
//!
//! Runs the planner at the lake's start cell with the full board visible
//! and prints every expanded search node: remaining depth, the action
//! simulated, the predicted reward, the child value, and the backed-up Q.
//! The final line is the argmax decision at the root.

use lwm::core::{HistoryBuffer, HistoryKind};
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};
use lwm::llm::{FactVisibility, OracleBackend, OracleModel};
use lwm::planner::{PlanConfig, Planner, TerminalSet};
use lwm::rng::SplitMix64;

fn main() {
    let board = reference_lake();
    let mut env = FrozenLakeEnv::new(board.clone());
    let spec = env.spec().clone();
    let backend = OracleBackend::new(OracleModel::FrozenLake(board), FactVisibility::Full);

    let obs = env.reset();
    let terminals = TerminalSet::new();
    let mut history = HistoryBuffer::with_default_capacity();
    history.push(HistoryKind::Obs, obs.as_str()).unwrap();
    let mut planner = Planner::new(
        &backend,
        PlanConfig::default(),
        &spec.description,
        &spec.allowed_actions,
        Vec::new(),
        &terminals,
    )
    .unwrap();

    let mut rng = SplitMix64::new(0);
    let choice = planner.plan_action(&obs, &history, &mut rng).unwrap();

    println!("{:<5} {:<28} {:<7} {:>6} {:>8} {:>8}", "depth", "node observation", "action", "r", "v_next", "q");
    for record in planner.trace() {
        println!(
            "{:<5} {:<28} {:<7} {:>6.2} {:>8.4} {:>8.4}",
            record.depth, record.obs, record.action, record.r, record.v_next, record.q
        );
    }
    println!("\n{} nodes expanded; chosen root action: {}", planner.trace().len(), choice);
}
