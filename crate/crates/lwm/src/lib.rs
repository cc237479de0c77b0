//! Agents that learn environment facts between episodes and plan with a
//! depth-limited lookahead over an LLM-style world model.
//!
//! The crate is organized around a small set of layers:
//!
//! * [`core`] holds the shared vocabulary types: observations, actions,
//!   atomic facts, bounded fact/history buffers, and episode transcripts.
//! * [`envs`] implements two text gridworlds, a frozen lake and a mini
//!   crafting world, with deterministic generation and fixture loading.
//! * [`llm`] defines the function-calling interface and three backends:
//!   a live HTTP client, a deterministic oracle, and record/replay cassettes.
//! * [`facts`] turns finished episodes into new atomic facts and compresses
//!   the fact store.
//! * [`planner`] is the depth-limited search over simulated steps with
//!   memoized backend calls.
//! * [`agents`] and [`baselines`] wire the above into runnable agents.
//! * [`harness`] runs step-budgeted evaluations and aggregates metrics.
//! * [`theory`] analyzes fact abstractions of tabular MDPs and checks the
//!   associated planning-loss bound.

#![forbid(unsafe_code)]

pub mod agents;
pub mod baselines;
pub mod cli;
pub mod core;
pub mod envs;
pub mod facts;
pub mod harness;
pub mod llm;
pub mod planner;
pub mod rng;
pub mod theory;

pub use crate::core::{
    ActionName, AtomicFact, EpisodeBuffer, FactMemory, HistoryBuffer, Observation, Transition,
};
