//! Budgeted evaluation runner, run persistence, and aggregate metrics.
//!
//! A run drives one agent through repeated episodes until a global step
//! budget is spent; a budget boundary mid-episode truncates the episode
//! but still triggers the agent's post-episode learning. Aggregation
//! computes Student-t confidence intervals across seeds and normalizes
//! returns against the random baseline and an expert anchor.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::agents::{Agent, AgentError};
use crate::core::{EpisodeBuffer, Transition};
use crate::envs::{Env, EnvError};
use crate::facts::DEFAULT_SUCCESS_THRESHOLD;

pub const DEFAULT_STEP_BUDGET: usize = 300;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("normalization undefined: expert and random scores coincide at {0}")]
    UndefinedNormalization(f64),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Everything one budgeted run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub agent: String,
    pub env: String,
    pub seed: u64,
    pub step_budget: usize,
    pub episodes: Vec<EpisodeBuffer>,
    pub cumulative_return: f64,
    pub steps_per_success: Option<f64>,
}

impl RunRecord {
    pub fn steps_used(&self) -> usize {
        self.episodes.iter().map(|e| e.len()).sum()
    }

    pub fn successes(&self, success_threshold: f64) -> usize {
        self.episodes
            .iter()
            .filter(|e| e.total_reward >= success_threshold)
            .count()
    }
}

/// Mean episode length over successful episodes; `None` when nothing
/// succeeded.
pub fn steps_per_success(record: &RunRecord, success_threshold: f64) -> Option<f64> {
    let lengths: Vec<f64> = record
        .episodes
        .iter()
        .filter(|e| e.total_reward >= success_threshold)
        .map(|e| e.len() as f64)
        .collect();
    if lengths.is_empty() {
        None
    } else {
        Some(lengths.iter().sum::<f64>() / lengths.len() as f64)
    }
}

/// Run episodes until `step_budget` environment steps are spent. The
/// final episode is cut at the boundary and still handed to the agent's
/// `end_episode` for learning.
pub fn run_budget(
    agent: &mut dyn Agent,
    env: &mut dyn Env,
    seed: u64,
    step_budget: usize,
) -> Result<RunRecord, HarnessError> {
    if step_budget < 1 {
        return Err(HarnessError::InvalidArgument(
            "step budget must be at least 1".into(),
        ));
    }
    let mut episodes = Vec::new();
    let mut steps_used = 0usize;
    while steps_used < step_budget {
        let mut obs = env.reset();
        agent.begin_episode(&obs)?;
        let mut buffer = EpisodeBuffer::new();
        loop {
            let action = agent.act(&obs)?;
            let step = env.step(&action)?;
            let transition = Transition {
                obs: obs.clone(),
                action,
                reward: step.reward,
                next_obs: step.obs.clone(),
                done: step.done,
            };
            agent.observe(&transition)?;
            buffer.push(transition);
            steps_used += 1;
            obs = step.obs;
            if step.done || env.truncated() || steps_used == step_budget {
                break;
            }
        }
        agent.end_episode(&buffer)?;
        episodes.push(buffer);
    }
    let cumulative_return = episodes.iter().map(|e| e.total_reward).sum();
    let mut record = RunRecord {
        agent: agent.name().to_string(),
        env: env.spec().name.clone(),
        seed,
        step_budget,
        episodes,
        cumulative_return,
        steps_per_success: None,
    };
    record.steps_per_success = steps_per_success(&record, DEFAULT_SUCCESS_THRESHOLD);
    Ok(record)
}

/// Run independent jobs on scoped worker threads, preserving order.
pub fn run_many<F>(jobs: Vec<F>) -> Vec<Result<RunRecord, HarnessError>>
where
    F: FnOnce() -> Result<RunRecord, HarnessError> + Send,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.into_iter().map(|job| scope.spawn(job)).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(HarnessError::InvalidArgument("worker thread panicked".into()))
                })
            })
            .collect()
    })
}

/// Sample mean and two-sided Student-t 95% half-width. A single sample
/// has no half-width.
pub fn ci95(samples: &[f64]) -> Result<(f64, Option<f64>), HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::InvalidArgument(
            "confidence interval needs at least one sample".into(),
        ));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, None));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let s = var.sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    Ok((mean, Some(t * s / (n as f64).sqrt())))
}

/// Affine rescaling so the random baseline maps to 0 and the expert
/// anchor to 100.
pub fn normalized_score(raw: f64, random_score: f64, expert_score: f64) -> Result<f64, HarnessError> {
    if expert_score == random_score {
        return Err(HarnessError::UndefinedNormalization(expert_score));
    }
    Ok(100.0 * (raw - random_score) / (expert_score - random_score))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TransitionRow<'a> {
    episode: usize,
    step: usize,
    obs: &'a str,
    action: &'a str,
    reward: f64,
    next_obs: &'a str,
    done: bool,
}

/// The summary.json payload, versioned by `schema`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub agent: String,
    pub env: String,
    pub seed: u64,
    pub step_budget: usize,
    pub steps_used: usize,
    pub num_episodes: usize,
    pub successes: usize,
    pub cumulative_return: f64,
    pub steps_per_success: Option<f64>,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord) -> Self {
        Self {
            schema: 1,
            agent: record.agent.clone(),
            env: record.env.clone(),
            seed: record.seed,
            step_budget: record.step_budget,
            steps_used: record.steps_used(),
            num_episodes: record.episodes.len(),
            successes: record.successes(DEFAULT_SUCCESS_THRESHOLD),
            cumulative_return: record.cumulative_return,
            steps_per_success: record.steps_per_success,
        }
    }
}

/// Persist a run as `{out}/{agent}_{env}_{seed}/summary.json` plus
/// `transitions.jsonl`, one JSON object per environment step. Returns the
/// run directory.
pub fn write_run_record(record: &RunRecord, out_root: &Path) -> Result<PathBuf, HarnessError> {
    let dir = out_root.join(format!("{}_{}_{}", record.agent, record.env, record.seed));
    fs::create_dir_all(&dir)?;

    let summary = RunSummary::from_record(record);
    let mut summary_json = serde_json::to_string_pretty(&summary)?;
    summary_json.push('\n');
    fs::write(dir.join("summary.json"), summary_json)?;

    let mut jsonl = Vec::new();
    for (e, episode) in record.episodes.iter().enumerate() {
        for (s, t) in episode.transitions.iter().enumerate() {
            let row = TransitionRow {
                episode: e,
                step: s,
                obs: t.obs.as_str(),
                action: t.action.as_str(),
                reward: t.reward,
                next_obs: t.next_obs.as_str(),
                done: t.done,
            };
            serde_json::to_writer(&mut jsonl, &row)?;
            jsonl.push(b'\n');
        }
    }
    let mut file = fs::File::create(dir.join("transitions.jsonl"))?;
    file.write_all(&jsonl)?;
    Ok(dir)
}

/// Collect every `summary.json` under `root`, one directory level deep or
/// directly in `root`.
pub fn load_run_summaries(root: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    let mut found = Vec::new();
    let direct = root.join("summary.json");
    if direct.is_file() {
        found.push(direct);
    }
    if root.is_dir() {
        for entry in fs::read_dir(root)? {
            let path = entry?.path();
            if path.is_dir() {
                let candidate = path.join("summary.json");
                if candidate.is_file() {
                    found.push(candidate);
                }
            }
        }
    }
    found.sort();
    let mut summaries = Vec::new();
    for path in found {
        let text = fs::read_to_string(&path)?;
        summaries.push(serde_json::from_str(&text)?);
    }
    Ok(summaries)
}

/// One aggregate table row; `mean`/`ci95` are `None` when no seed
/// produced the metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub agent: String,
    pub env: String,
    pub metric: String,
    pub mean: Option<f64>,
    pub ci95: Option<f64>,
    pub n: usize,
}

/// Aggregate per (agent, env): mean and CI over seeds for cumulative
/// return and steps per success, plus a normalized score anchored at the
/// random baseline (0) and the expert (100). The expert anchor defaults
/// to the best mean cumulative return in the same environment.
pub fn aggregate_metrics(
    summaries: &[RunSummary],
    expert_override: Option<f64>,
) -> Result<Vec<MetricRow>, HarnessError> {
    let mut groups: BTreeMap<(String, String), Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry((s.env.clone(), s.agent.clone()))
            .or_default()
            .push(s);
    }

    let mut return_means: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rows = Vec::new();
    for ((env, agent), group) in &groups {
        let returns: Vec<f64> = group.iter().map(|s| s.cumulative_return).collect();
        let (mean, half) = ci95(&returns)?;
        return_means.insert((env.clone(), agent.clone()), mean);
        rows.push(MetricRow {
            agent: agent.clone(),
            env: env.clone(),
            metric: "cumulative_return".into(),
            mean: Some(mean),
            ci95: half,
            n: returns.len(),
        });

        let sps: Vec<f64> = group.iter().filter_map(|s| s.steps_per_success).collect();
        if sps.is_empty() {
            rows.push(MetricRow {
                agent: agent.clone(),
                env: env.clone(),
                metric: "steps_per_success".into(),
                mean: None,
                ci95: None,
                n: 0,
            });
        } else {
            let (mean, half) = ci95(&sps)?;
            rows.push(MetricRow {
                agent: agent.clone(),
                env: env.clone(),
                metric: "steps_per_success".into(),
                mean: Some(mean),
                ci95: half,
                n: sps.len(),
            });
        }
    }

    let env_names: std::collections::BTreeSet<String> =
        groups.keys().map(|(env, _)| env.clone()).collect();
    for env in &env_names {
        let random_mean = match return_means.get(&(env.clone(), "random".to_string())) {
            Some(m) => *m,
            None => continue,
        };
        let expert = match expert_override {
            Some(e) => e,
            None => return_means
                .iter()
                .filter(|((e, _), _)| e == env)
                .map(|(_, m)| *m)
                .fold(f64::NEG_INFINITY, f64::max),
        };
        if expert == random_mean {
            continue;
        }
        let scale = (100.0 / (expert - random_mean)).abs();
        let env_rows: Vec<MetricRow> = rows
            .iter()
            .filter(|r| &r.env == env && r.metric == "cumulative_return")
            .map(|r| MetricRow {
                agent: r.agent.clone(),
                env: r.env.clone(),
                metric: "normalized_score".into(),
                mean: r
                    .mean
                    .map(|m| normalized_score(m, random_mean, expert).unwrap()),
                ci95: r.ci95.map(|h| h * scale),
                n: r.n,
            })
            .collect();
        rows.extend(env_rows);
    }

    rows.sort_by(|a, b| {
        (&a.env, &a.agent, &a.metric).cmp(&(&b.env, &b.agent, &b.metric))
    });
    Ok(rows)
}

/// CSV with columns `agent,env,metric,mean,ci95,n`; absent values render
/// as empty fields.
pub fn render_metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("agent,env,metric,mean,ci95,n\n");
    for row in rows {
        let mean = row.mean.map(|m| format!("{m:.4}")).unwrap_or_default();
        let ci = row.ci95.map(|c| format!("{c:.4}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.agent, row.env, row.metric, mean, ci, row.n
        ));
    }
    out
}
