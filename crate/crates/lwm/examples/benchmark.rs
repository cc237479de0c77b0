//! Run every agent on the frozen lake with the full oracle backend and
//! print the aggregated metrics table.

use lwm::agents::LwmAgent;
use lwm::baselines::{RandomAgent, ReactAgent, ReactFecAgent, ReflexionAgent};
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};
use lwm::harness::{aggregate_metrics, render_metrics_csv, run_budget, RunSummary};
use lwm::llm::{FactVisibility, OracleBackend, OracleModel};
use lwm::planner::PlanConfig;

const SEEDS: [u64; 3] = [0, 1, 2];
const BUDGET: usize = 120;

fn oracle() -> OracleBackend {
    OracleBackend::new(
        OracleModel::FrozenLake(reference_lake()),
        FactVisibility::Full,
    )
}

fn bench(agent_name: &str, mut make: impl FnMut(u64) -> RunSummary) -> Vec<RunSummary> {
    let out: Vec<RunSummary> = SEEDS.iter().map(|&seed| make(seed)).collect();
    let mean: f64 =
        out.iter().map(|s| s.cumulative_return).sum::<f64>() / out.len() as f64;
    println!("{agent_name:>10}: mean return {mean:8.2} over {} seeds", out.len());
    out
}

fn main() {
    let mut env = FrozenLakeEnv::new(reference_lake());
    let spec = env.spec().clone();

    let mut summaries = Vec::new();
    summaries.extend(bench("random", |seed| {
        let mut agent = RandomAgent::new(&spec, seed);
        let record = run_budget(&mut agent, &mut env, seed, BUDGET).unwrap();
        RunSummary::from_record(&record)
    }));
    summaries.extend(bench("react", |seed| {
        let mut agent = ReactAgent::new(oracle(), &spec, seed);
        let record = run_budget(&mut agent, &mut env, seed, BUDGET).unwrap();
        RunSummary::from_record(&record)
    }));
    summaries.extend(bench("reflexion", |seed| {
        let mut agent = ReflexionAgent::new(oracle(), &spec, seed);
        let record = run_budget(&mut agent, &mut env, seed, BUDGET).unwrap();
        RunSummary::from_record(&record)
    }));
    summaries.extend(bench("react_fec", |seed| {
        let mut agent = ReactFecAgent::new(oracle(), &spec, seed);
        let record = run_budget(&mut agent, &mut env, seed, BUDGET).unwrap();
        RunSummary::from_record(&record)
    }));
    summaries.extend(bench("lwm", |seed| {
        let mut agent =
            LwmAgent::new(oracle(), &spec, PlanConfig::default(), seed).unwrap();
        let record = run_budget(&mut agent, &mut env, seed, BUDGET).unwrap();
        RunSummary::from_record(&record)
    }));

    let rows = aggregate_metrics(&summaries, None).unwrap();
    println!();
    println!("{}", render_metrics_csv(&rows));
}
