//! Record every backend completion to a cassette, then replay the same
//! run from the cassette with no oracle behind it.
//!
//! The cassette is a JSONL file keyed by a hash of (function, prompt,
//! temperature), so a replayed run must issue exactly the same calls.

use lwm::agents::LwmAgent;
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};
use lwm::harness::run_budget;
use lwm::llm::{
    FactVisibility, OracleBackend, OracleModel, RecordingBackend, ReplayBackend,
};
use lwm::planner::PlanConfig;

fn main() {
    let dir = std::env::temp_dir().join("lwm_record_replay_example");
    std::fs::create_dir_all(&dir).unwrap();
    let cassette = dir.join("cassette.jsonl");
    let _ = std::fs::remove_file(&cassette);

    let fresh_oracle = || {
        OracleBackend::new(
            OracleModel::FrozenLake(reference_lake()),
            FactVisibility::FactsOnly,
        )
    };

    let recorded = {
        let mut env = FrozenLakeEnv::new(reference_lake());
        let spec = env.spec().clone();
        let backend = RecordingBackend::create(fresh_oracle(), &cassette).unwrap();
        let mut agent = LwmAgent::new(backend, &spec, PlanConfig::default(), 0).unwrap();
        run_budget(&mut agent, &mut env, 0, 120).unwrap()
    };
    let lines = std::fs::read_to_string(&cassette).unwrap().lines().count();
    println!(
        "recorded: {} episodes, return {:.2}, cassette holds {lines} completions",
        recorded.episodes.len(),
        recorded.cumulative_return
    );

    let replayed = {
        let mut env = FrozenLakeEnv::new(reference_lake());
        let spec = env.spec().clone();
        let backend = ReplayBackend::load(&cassette).unwrap();
        let mut agent = LwmAgent::new(backend, &spec, PlanConfig::default(), 0).unwrap();
        run_budget(&mut agent, &mut env, 0, 120).unwrap()
    };
    println!(
        "replayed: {} episodes, return {:.2}",
        replayed.episodes.len(),
        replayed.cumulative_return
    );
    println!(
        "episode-for-episode identical: {}",
        recorded.episodes == replayed.episodes
    );
}
