//! Text gridworld environments with deterministic generation.

pub mod crafter;
pub mod frozen_lake;

use crate::core::{ActionName, Observation};
use thiserror::Error;

pub use crafter::{gen_crafter, CrafterEnv, CrafterWorld, Tile};
pub use frozen_lake::{gen_frozen_lake, FrozenLakeBoard, FrozenLakeEnv, Terrain};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown action: {0}")]
    UnknownAction(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("fixture parse error: {0}")]
    ParseError(String),
}

/// Static description of an environment instance.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    /// Stable identifier used for grouping runs, e.g. `frozenlake_4x4`.
    pub name: String,
    /// One-line prompt description of dynamics, rewards, and actions.
    pub description: String,
    pub allowed_actions: Vec<ActionName>,
    pub max_steps: usize,
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
}

/// A resettable episodic environment.
pub trait Env {
    fn spec(&self) -> &EnvSpec;
    /// Restore the initial state and return the first observation.
    fn reset(&mut self) -> Observation;
    fn step(&mut self, action: &ActionName) -> Result<StepResult, EnvError>;
    fn done(&self) -> bool;
    /// True when the last episode ended by exhausting the step budget
    /// rather than by reaching a terminal state.
    fn truncated(&self) -> bool;
}
