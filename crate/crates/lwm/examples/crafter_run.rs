//! Complete the crafting chain with the planning agent.
//!
//! The tool progression (gather wood and stone, craft the stone pickaxe,
//! gather iron, craft the iron pickaxe) needs all eight actions in play,
//! so the planner runs with a branch factor of eight.

use lwm::agents::{Agent, LwmAgent};
use lwm::core::{EpisodeBuffer, Transition};
use lwm::envs::crafter::reference_crafter;
use lwm::envs::{CrafterEnv, Env};
use lwm::llm::{FactVisibility, OracleBackend, OracleModel};
use lwm::planner::PlanConfig;

fn main() {
    let world = reference_crafter();
    println!("World:\n{}\n", world.render_fixture());
    println!("Actions: 0..3 move north/south/east/west, 4 collect, 5/6/7 craft pickaxes.\n");

    let mut env = CrafterEnv::new(world.clone());
    let spec = env.spec().clone();
    let backend = OracleBackend::new(OracleModel::Crafter(world), FactVisibility::Full);
    let cfg = PlanConfig {
        branch: 8,
        ..PlanConfig::default()
    };
    let mut agent = LwmAgent::new(backend, &spec, cfg, 0).unwrap();

    let mut obs = env.reset();
    agent.begin_episode(&obs).unwrap();
    let mut buffer = EpisodeBuffer::new();
    let mut step = 0u32;
    loop {
        let action = agent.act(&obs).unwrap();
        let result = env.step(&action).unwrap();
        step += 1;
        println!("step {:>2}: action {} -> reward {:>5}, {}", step, action, result.reward, result.obs.as_str());
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
        if result.done || env.truncated() {
            break;
        }
    }
    agent.end_episode(&buffer).unwrap();

    println!("\nFinished in {} steps, total reward {}.", buffer.transitions.len(), buffer.total_reward);
}
