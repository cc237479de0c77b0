//! Randomized invariant checks over the core buffers, environments,
//! metrics, and serialization schemas.

use proptest::prelude::*;

use lwm::core::{ActionName, FactMemory, HistoryBuffer, InsertOutcome, Observation};
use lwm::envs::crafter::gen_crafter;
use lwm::envs::frozen_lake::{gen_frozen_lake, parse_observation};
use lwm::envs::{CrafterEnv, Env, FrozenLakeEnv};
use lwm::harness::{ci95, normalized_score, RunSummary};
use lwm::llm::{LlmResult, ReactStepResult, ScriptedBackend};
use lwm::baselines::react_act;
use lwm::llm::prompts::ReactKnowledge;
use lwm::rng::SplitMix64;
use lwm::theory::{build_abstract_mdp, epsilon_sim, random_instance, Abstraction};

proptest! {
    #[test]
    fn fact_memory_caps_dedups_and_keeps_order(
        capacity in 1usize..20,
        texts in proptest::collection::vec("[a-z]{1,6}", 0..40),
    ) {
        let mut memory = FactMemory::new(capacity);
        for text in &texts {
            let before = memory.texts();
            match memory.insert(text) {
                InsertOutcome::Duplicate => prop_assert!(before.contains(text)),
                InsertOutcome::Inserted => prop_assert!(!before.contains(text)),
                InsertOutcome::Rejected => prop_assert!(text.trim().is_empty()),
            }
            prop_assert!(memory.len() <= capacity);
            let after = memory.texts();
            let mut sorted = after.clone();
            sorted.dedup();
            prop_assert_eq!(&sorted, &after, "no adjacent duplicates survive");
        }
        let final_texts = memory.texts();
        let mut unique = final_texts.clone();
        unique.sort();
        unique.dedup();
        prop_assert_eq!(unique.len(), final_texts.len(), "store holds no duplicates");
    }

    #[test]
    fn history_buffer_slides_and_keeps_the_newest_line(
        capacity in 1usize..10,
        lines in proptest::collection::vec("[a-z]{1,8}", 1..30),
    ) {
        let mut history = HistoryBuffer::new(capacity);
        for line in &lines {
            history.push(lwm::core::HistoryKind::Obs, line).unwrap();
            prop_assert!(history.len() <= capacity);
        }
        let rendered = history.render();
        let newest = format!("Obs: {}", lines.last().unwrap());
        prop_assert!(rendered.ends_with(&newest));
        prop_assert_eq!(rendered.lines().count(), history.len());
    }

    #[test]
    fn lake_episodes_stay_in_contract(seed in 0u64..500, action_seed in 0u64..100) {
        let n = 4 + (seed % 4) as usize;
        let board = gen_frozen_lake(n, 0.5, seed).unwrap();
        let mut env = FrozenLakeEnv::new(board);
        let max_steps = env.spec().max_steps;
        prop_assert_eq!(max_steps, 8 * (n - 1));
        let allowed = env.spec().allowed_actions.clone();
        let mut rng = SplitMix64::new(action_seed);
        let obs = env.reset();
        prop_assert!(parse_observation(obs.as_str()).is_some());
        let mut steps = 0usize;
        loop {
            let action = allowed[rng.next_below(allowed.len() as u64) as usize].clone();
            let result = env.step(&action).unwrap();
            steps += 1;
            prop_assert!([-1.0, 0.0, 1.0].contains(&result.reward));
            prop_assert!(parse_observation(result.obs.as_str()).is_some());
            if result.done {
                break;
            }
        }
        prop_assert!(steps <= max_steps);
        prop_assert!(env.step(&allowed[0]).is_err(), "stepping a finished episode must fail");
    }

    #[test]
    fn crafter_episodes_stay_in_contract(seed in 0u64..300, action_seed in 0u64..50) {
        let n = 4 + (seed % 3) as usize;
        let world = gen_crafter(n, seed).unwrap();
        let mut env = CrafterEnv::new(world);
        prop_assert_eq!(env.spec().max_steps, 4 * n * n);
        let allowed = env.spec().allowed_actions.clone();
        let mut rng = SplitMix64::new(action_seed);
        env.reset();
        let mut steps = 0usize;
        loop {
            let action = allowed[rng.next_below(allowed.len() as u64) as usize].clone();
            let result = env.step(&action).unwrap();
            steps += 1;
            prop_assert!([-1.0, 9.0, 19.0, 49.0].contains(&result.reward));
            prop_assert!(result.obs.as_str().contains("Inventory:"));
            if result.done {
                break;
            }
        }
        prop_assert!(steps <= 4 * n * n);
    }

    #[test]
    fn normalization_anchors_hold(
        random in -500.0f64..500.0,
        spread in 0.1f64..500.0,
    ) {
        let expert = random + spread;
        prop_assert!((normalized_score(random, random, expert).unwrap()).abs() < 1e-9);
        prop_assert!((normalized_score(expert, random, expert).unwrap() - 100.0).abs() < 1e-9);
        let mid = normalized_score((random + expert) / 2.0, random, expert).unwrap();
        prop_assert!((mid - 50.0).abs() < 1e-6);
        prop_assert!(normalized_score(random, random, random).is_err());
    }

    #[test]
    fn ci95_is_permutation_invariant_and_ordered(
        samples in proptest::collection::vec(-100.0f64..100.0, 2..12),
        rot in 0usize..12,
    ) {
        let (mean, half) = ci95(&samples).unwrap();
        let half = half.unwrap();
        prop_assert!(half >= 0.0);
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(mean >= lo - 1e-9 && mean <= hi + 1e-9);
        let mut rotated = samples.clone();
        rotated.rotate_left(rot % samples.len());
        let (mean2, half2) = ci95(&rotated).unwrap();
        prop_assert!((mean - mean2).abs() < 1e-9);
        prop_assert!((half - half2.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn single_sample_has_no_interval(x in -100.0f64..100.0) {
        let (mean, half) = ci95(&[x]).unwrap();
        prop_assert_eq!(mean, x);
        prop_assert!(half.is_none());
    }

    #[test]
    fn run_summary_round_trips_through_json(
        seed in 0u64..1000,
        steps_used in 0usize..400,
        successes in 0usize..50,
        cumulative in -300.0f64..300.0,
    ) {
        let summary = RunSummary {
            schema: 1,
            agent: "lwm".into(),
            env: "frozenlake_4x4".into(),
            seed,
            step_budget: 300,
            steps_used,
            num_episodes: successes + 1,
            successes,
            cumulative_return: cumulative,
            steps_per_success: if successes > 0 { Some(6.0) } else { None },
        };
        let json = serde_json::to_string(&summary).unwrap();
        let back: RunSummary = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(summary, back);
    }

    #[test]
    fn react_fallback_always_returns_a_legal_action(
        proposal in "[a-z]{1,8}",
        second in "[a-z]{1,8}",
        rng_seed in 0u64..1000,
    ) {
        let allowed: Vec<ActionName> = ["up", "down", "left", "right"]
            .iter()
            .map(|a| ActionName::new(*a).unwrap())
            .collect();
        let scripted = ScriptedBackend::new([
            LlmResult::ReactStep(ReactStepResult {
                thought: "t".into(),
                action: proposal.clone(),
            }),
            LlmResult::ReactStep(ReactStepResult {
                thought: "t".into(),
                action: second.clone(),
            }),
        ]);
        let obs = Observation::new("You are at (0, 0) on start.").unwrap();
        let mut history = HistoryBuffer::with_default_capacity();
        history.push(lwm::core::HistoryKind::Obs, obs.as_str()).unwrap();
        let mut rng = SplitMix64::new(rng_seed);
        let (_, action) = react_act(
            &scripted,
            "test grid",
            &obs,
            &history,
            &allowed,
            ReactKnowledge::None,
            &mut rng,
        )
        .unwrap();
        prop_assert!(allowed.contains(&action));
    }

    #[test]
    fn abstract_rows_stay_stochastic_and_eps_sim_is_nonnegative(seed in 0u64..300) {
        let mut rng = SplitMix64::new(seed);
        let (g, psi) = random_instance(&mut rng, 12, 4, 0.8, 0.95);
        let m = build_abstract_mdp(&g, &psi).unwrap();
        for z in 0..m.n_states {
            for a in 0..m.n_actions {
                let sum: f64 = m.t[z][a].iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-9);
                prop_assert!(m.t[z][a].iter().all(|p| *p >= 0.0));
            }
        }
        prop_assert!(epsilon_sim(&g, &psi, &m) >= 0.0);
        let identity = Abstraction::identity(g.n_states);
        let same = build_abstract_mdp(&g, &identity).unwrap();
        prop_assert!(epsilon_sim(&g, &identity, &same) <= 1e-10);
    }

    #[test]
    fn rng_bounds_and_fork_independence(seed in 0u64..10_000, bound in 1u64..1000) {
        let mut a = SplitMix64::new(seed);
        let mut b = SplitMix64::new(seed);
        for _ in 0..50 {
            prop_assert!(a.next_below(bound) < bound);
        }
        let mut fork = b.fork();
        let direct: Vec<u64> = (0..10).map(|_| b.next_u64()).collect();
        let forked: Vec<u64> = (0..10).map(|_| fork.next_u64()).collect();
        prop_assert_ne!(direct, forked, "fork must not mirror the parent stream");
    }
}
