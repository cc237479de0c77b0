//! Post-episode fact learning: summarize the transcript, elicit new atomic
//! facts, optionally compress the store, and keep the memory invariants.

use thiserror::Error;

use crate::core::{AtomicFact, EpisodeBuffer, FactMemory};
use crate::llm::prompts::{render_fact_extraction, render_fact_redundancy_remover};
use crate::llm::{Backend, FunctionKind, LlmCall, LlmError, PLANNER_TEMPERATURE};

/// Episode return at or above which an episode counts as a success.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.99;

#[derive(Debug, Error)]
pub enum FactError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
    /// The step budget ran out before the environment ended the episode.
    Truncated,
}

impl Outcome {
    /// Label used in prompts. Truncation renders as a failure flavored
    /// with its cause so the extractor can tell budget death from hazard
    /// death.
    pub fn prompt_label(self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::Failure => "FAILURE",
            Outcome::Truncated => "FAILURE (step limit)",
        }
    }
}

/// Shortest reward form with at least one decimal: `0.0`, `-1.0`, `0.25`.
pub fn format_reward(r: f64) -> String {
    if r == r.trunc() {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

/// Rendered episode transcript fed to the extraction and reflection
/// prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub outcome: Outcome,
    pub total_reward: f64,
    /// Numbered transition lines, one per step.
    pub lines: Vec<String>,
}

impl TrajectorySummary {
    /// Full prompt block: outcome header plus the numbered lines.
    pub fn render(&self) -> String {
        let mut out = format!(
            "Outcome: {} (Total Reward: {})",
            self.outcome.prompt_label(),
            format_reward(self.total_reward)
        );
        for line in &self.lines {
            out.push('\n');
            out.push_str(line);
        }
        out
    }
}

/// Classify the episode and render its transcript.
///
/// Success is a return at or above `success_threshold`; an episode the
/// environment never ended is truncated; anything else is a failure.
pub fn format_trajectory_summary(
    buf: &EpisodeBuffer,
    success_threshold: f64,
) -> Result<TrajectorySummary, FactError> {
    if buf.is_empty() {
        return Err(FactError::InvalidArgument(
            "cannot summarize an empty episode".into(),
        ));
    }
    let outcome = if buf.total_reward >= success_threshold {
        Outcome::Success
    } else if !buf.ended_by_env() {
        Outcome::Truncated
    } else {
        Outcome::Failure
    };
    let lines = buf
        .transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            format!(
                "{}. Obs: {} | Act: {} | Reward: {} | Next_Obs: {}",
                i + 1,
                t.obs.as_str(),
                t.action.as_str(),
                format_reward(t.reward),
                t.next_obs.as_str()
            )
        })
        .collect();
    Ok(TrajectorySummary {
        outcome,
        total_reward: buf.total_reward,
        lines,
    })
}

/// Elicit new atomic facts from a finished episode.
///
/// Facts the memory already holds are filtered out defensively even though
/// the prompt forbids them; whitespace-only responses are dropped.
pub fn extract_facts<B: Backend>(
    backend: &B,
    env_description: &str,
    summary: &TrajectorySummary,
    known: &FactMemory,
) -> Result<Vec<AtomicFact>, FactError> {
    let prompt = render_fact_extraction(env_description, &summary.render(), &known.texts());
    let call = LlmCall::new(FunctionKind::FactExtraction, prompt, PLANNER_TEMPERATURE);
    let result = backend.complete(&call)?.expect_facts()?;
    let mut out: Vec<AtomicFact> = Vec::new();
    for text in result.new_facts {
        let fact = match AtomicFact::new(&text) {
            Ok(f) => f,
            Err(_) => {
                log::warn!("extractor produced an empty fact, dropping");
                continue;
            }
        };
        if known.contains(fact.as_str()) || out.iter().any(|f| *f == fact) {
            continue;
        }
        out.push(fact);
    }
    Ok(out)
}

/// Ask the backend to remove redundant facts, then enforce exact-duplicate
/// removal regardless of what it returns.
///
/// An empty result for a non-empty input is treated as a compression
/// anomaly: the input is kept and a warning logged.
pub fn compress_facts<B: Backend>(
    backend: &B,
    env_description: &str,
    facts: &[AtomicFact],
) -> Result<Vec<AtomicFact>, FactError> {
    let texts: Vec<String> = facts.iter().map(|f| f.as_str().to_string()).collect();
    let prompt = render_fact_redundancy_remover(env_description, &texts);
    let call = LlmCall::new(
        FunctionKind::FactRedundancyRemover,
        prompt,
        PLANNER_TEMPERATURE,
    );
    let result = backend.complete(&call)?.expect_compressed()?;
    let mut out: Vec<AtomicFact> = Vec::new();
    for text in result.all_facts {
        let fact = match AtomicFact::new(&text) {
            Ok(f) => f,
            Err(_) => {
                log::warn!("compressor produced an empty fact, dropping");
                continue;
            }
        };
        if out.iter().any(|f| *f == fact) {
            continue;
        }
        out.push(fact);
    }
    if out.is_empty() && !facts.is_empty() {
        log::warn!(
            "compression anomaly: backend emptied {} facts, keeping the input",
            facts.len()
        );
        return Ok(facts.to_vec());
    }
    Ok(out)
}

/// What one post-episode learning pass did.
#[derive(Debug, Clone, PartialEq)]
pub struct FactLearnReport {
    pub new_facts: Vec<AtomicFact>,
    pub compressed: bool,
}

/// Full post-episode update: extract, insert, optionally compress.
///
/// The capacity bound is enforced by the memory itself as the final
/// contents are written, so compression sees the complete union first.
pub fn learn_facts_and_update<B: Backend>(
    backend: &B,
    buf: &EpisodeBuffer,
    mem: &mut FactMemory,
    env_description: &str,
    compress_enabled: bool,
    success_threshold: f64,
) -> Result<FactLearnReport, FactError> {
    let summary = format_trajectory_summary(buf, success_threshold)?;
    let new_facts = extract_facts(backend, env_description, &summary, mem)?;
    for fact in &new_facts {
        mem.insert(fact.as_str());
    }
    let mut compressed = false;
    if compress_enabled && !mem.is_empty() {
        let merged = mem.snapshot();
        let kept = compress_facts(backend, env_description, &merged)?;
        compressed = kept != merged;
        mem.replace_with(&kept);
    }
    Ok(FactLearnReport {
        new_facts,
        compressed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{ActionName, Observation, Transition};
    use crate::envs::frozen_lake::reference_lake;
    use crate::llm::oracle::{lake_hole_fact, OracleModel};
    use crate::llm::{
        FactExtractionResult, FactRedundancyRemoverResult, FactVisibility, LlmResult,
        OracleBackend, ScriptedBackend,
    };

    fn transition(obs: &str, act: &str, reward: f64, next: &str, done: bool) -> Transition {
        Transition {
            obs: Observation::new(obs).unwrap(),
            action: ActionName::new(act).unwrap(),
            reward,
            next_obs: Observation::new(next).unwrap(),
            done,
        }
    }

    fn lake_episode(path: &[(&str, &str, f64, &str)], done: bool) -> EpisodeBuffer {
        let mut buf = EpisodeBuffer::new();
        for (i, (obs, act, r, next)) in path.iter().enumerate() {
            buf.push(transition(obs, act, *r, next, done && i + 1 == path.len()));
        }
        buf
    }

    #[test]
    fn summary_matches_reference_line_format() {
        let buf = lake_episode(&[("S00", "right", 0.0, "S01")], false);
        let summary = format_trajectory_summary(&buf, DEFAULT_SUCCESS_THRESHOLD).unwrap();
        assert_eq!(
            summary.lines,
            vec!["1. Obs: S00 | Act: right | Reward: 0.0 | Next_Obs: S01"]
        );
        assert_eq!(summary.outcome, Outcome::Truncated);
        assert_eq!(
            summary.render(),
            "Outcome: FAILURE (step limit) (Total Reward: 0.0)\n\
1. Obs: S00 | Act: right | Reward: 0.0 | Next_Obs: S01"
        );
    }

    #[test]
    fn outcome_classification_by_threshold_and_termination() {
        let success = lake_episode(&[("a", "right", 1.0, "b")], true);
        assert_eq!(
            format_trajectory_summary(&success, 0.99).unwrap().outcome,
            Outcome::Success
        );

        let failure = lake_episode(&[("a", "down", -1.0, "b")], true);
        assert_eq!(
            format_trajectory_summary(&failure, 0.99).unwrap().outcome,
            Outcome::Failure
        );

        let truncated = lake_episode(&[("a", "up", 0.0, "a")], false);
        assert_eq!(
            format_trajectory_summary(&truncated, 0.99).unwrap().outcome,
            Outcome::Truncated
        );

        assert!(matches!(
            format_trajectory_summary(&EpisodeBuffer::new(), 0.99),
            Err(FactError::InvalidArgument(_))
        ));
    }

    #[test]
    fn reward_formatting_is_one_decimal_minimum() {
        assert_eq!(format_reward(0.0), "0.0");
        assert_eq!(format_reward(-1.0), "-1.0");
        assert_eq!(format_reward(1.0), "1.0");
        assert_eq!(format_reward(0.25), "0.25");
        assert_eq!(format_reward(-26.0), "-26.0");
        assert_eq!(format_reward(49.0), "49.0");
    }

    fn oracle() -> OracleBackend {
        OracleBackend::new(
            OracleModel::FrozenLake(reference_lake()),
            FactVisibility::FactsOnly,
        )
    }

    #[test]
    fn oracle_extraction_reports_the_entered_hole() {
        let buf = lake_episode(
            &[(
                "You are at (0, 0) on start.",
                "down",
                -1.0,
                "You are at (1, 0) on hole.",
            )],
            true,
        );
        let summary = format_trajectory_summary(&buf, 0.99).unwrap();
        let board = reference_lake();
        let known = FactMemory::new(10);
        let facts = extract_facts(&oracle(), &board.description(), &summary, &known).unwrap();
        assert_eq!(facts.len(), 1);
        assert_eq!(facts[0].as_str(), "(1,0) is a hole.");
    }

    #[test]
    fn known_facts_are_filtered_defensively() {
        let backend = ScriptedBackend::new([LlmResult::FactExtraction(FactExtractionResult {
            thought: "t".into(),
            new_facts: vec![
                "(1,0) is a hole.".to_string(),
                "(1,0)  is a hole.".to_string(),
                "(2,1) is a hole.".to_string(),
                "   ".to_string(),
            ],
        })]);
        let mut known = FactMemory::new(10);
        known.insert("(1,0) is a hole.");
        let buf = lake_episode(&[("a", "down", -1.0, "b")], true);
        let summary = format_trajectory_summary(&buf, 0.99).unwrap();
        let facts = extract_facts(&backend, "env", &summary, &known).unwrap();
        assert_eq!(facts.len(), 1);
        assert_eq!(facts[0].as_str(), "(2,1) is a hole.");
    }

    #[test]
    fn compression_post_filters_exact_duplicates() {
        let backend = ScriptedBackend::new([LlmResult::FactRedundancyRemover(
            FactRedundancyRemoverResult {
                thought: "t".into(),
                all_facts: vec![
                    "hole_at(1,1)".to_string(),
                    "hole_at(1,1)".to_string(),
                    "goal_at(3,3)".to_string(),
                ],
            },
        )]);
        let input = vec![
            AtomicFact::new("hole_at(1,1)").unwrap(),
            AtomicFact::new("hole_at(row=1,col=1)").unwrap(),
            AtomicFact::new("goal_at(3,3)").unwrap(),
        ];
        let kept = compress_facts(&backend, "env", &input).unwrap();
        assert_eq!(
            kept.iter().map(|f| f.as_str()).collect::<Vec<_>>(),
            vec!["hole_at(1,1)", "goal_at(3,3)"]
        );
    }

    #[test]
    fn empty_compression_result_keeps_input() {
        let backend = ScriptedBackend::new([LlmResult::FactRedundancyRemover(
            FactRedundancyRemoverResult {
                thought: "t".into(),
                all_facts: vec![],
            },
        )]);
        let input = vec![AtomicFact::new("(1,0) is a hole.").unwrap()];
        let kept = compress_facts(&backend, "env", &input).unwrap();
        assert_eq!(kept, input);
    }

    #[test]
    fn oracle_compression_is_a_subset_of_its_input() {
        let board = reference_lake();
        let input: Vec<AtomicFact> = board
            .holes()
            .iter()
            .map(|(r, c)| AtomicFact::new(lake_hole_fact(*r, *c)).unwrap())
            .collect();
        let kept = compress_facts(&oracle(), &board.description(), &input).unwrap();
        assert_eq!(kept, input);
        for fact in &kept {
            assert!(input.contains(fact));
        }
    }

    #[test]
    fn learning_accumulates_hole_facts_in_insertion_order() {
        let board = reference_lake();
        let backend = oracle();
        let mut mem = FactMemory::with_default_capacity();
        let episodes = [
            (1usize, 0usize),
            (2, 1),
            (0, 2),
            (1, 3),
        ];
        for (r, c) in episodes {
            let obs = board.observe(r, c);
            let buf = lake_episode(
                &[(
                    "You are at (0, 0) on start.",
                    "down",
                    -1.0,
                    obs.as_str(),
                )],
                true,
            );
            let report = learn_facts_and_update(
                &backend,
                &buf,
                &mut mem,
                &board.description(),
                true,
                DEFAULT_SUCCESS_THRESHOLD,
            )
            .unwrap();
            assert_eq!(report.new_facts.len(), 1);
            assert!(!report.compressed);
        }
        assert_eq!(
            mem.texts(),
            vec![
                "(1,0) is a hole.",
                "(2,1) is a hole.",
                "(0,2) is a hole.",
                "(1,3) is a hole.",
            ]
        );

        // Replaying an episode adds nothing.
        let buf = lake_episode(
            &[(
                "You are at (0, 0) on start.",
                "down",
                -1.0,
                "You are at (1, 0) on hole.",
            )],
            true,
        );
        let report = learn_facts_and_update(
            &backend,
            &buf,
            &mut mem,
            &board.description(),
            false,
            DEFAULT_SUCCESS_THRESHOLD,
        )
        .unwrap();
        assert!(report.new_facts.is_empty());
        assert_eq!(mem.len(), 4);
    }

    #[test]
    fn capacity_is_enforced_after_compression() {
        let backend = oracle();
        let board = reference_lake();
        let mut mem = FactMemory::new(2);
        mem.insert("(1,0) is a hole.");
        mem.insert("(2,1) is a hole.");
        let buf = lake_episode(
            &[(
                "You are at (0, 0) on start.",
                "right",
                -1.0,
                "You are at (0, 2) on hole.",
            )],
            true,
        );
        learn_facts_and_update(
            &backend,
            &buf,
            &mut mem,
            &board.description(),
            true,
            DEFAULT_SUCCESS_THRESHOLD,
        )
        .unwrap();
        assert_eq!(mem.len(), 2);
        assert_eq!(mem.texts(), vec!["(2,1) is a hole.", "(0,2) is a hole."]);
    }
}
