//! Drive the frozen lake environment directly, no agent involved.
//!
//! Walks the safe diagonal path of the reference board, printing every
//! observation, then shows what falling in a hole looks like.

use lwm::core::ActionName;
use lwm::envs::frozen_lake::reference_lake;
use lwm::envs::{Env, FrozenLakeEnv};

fn main() {
    let board = reference_lake();
    println!("Board ({} holes):\n{}\n", board.holes().len(), board.render_fixture());

    let mut env = FrozenLakeEnv::new(board);
    let obs = env.reset();
    println!("reset  -> {}", obs.as_str());
    for step in ["right", "down", "right", "down", "right", "down"] {
        let result = env.step(&ActionName::new(step).unwrap()).unwrap();
        println!("{:<6} -> {}  (reward {}, done {})", step, result.obs.as_str(), result.reward, result.done);
    }

    println!();
    let obs = env.reset();
    println!("reset  -> {}", obs.as_str());
    for step in ["right", "right"] {
        let result = env.step(&ActionName::new(step).unwrap()).unwrap();
        println!("{:<6} -> {}  (reward {}, done {})", step, result.obs.as_str(), result.reward, result.done);
    }
}
