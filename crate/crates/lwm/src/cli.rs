//! Command-line front end: `lwm run`, `lwm eval`, and `lwm theory`.
//!
//! Every flag can also come from a flat `key = value` config file passed
//! with `--config`; explicit flags override file values, which override
//! built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::agents::{AgentError, LwmAgent};
use crate::baselines::{RandomAgent, ReactAgent, ReactFecAgent, ReflexionAgent};
use crate::envs::crafter::reference_crafter;
use crate::envs::frozen_lake::reference_lake;
use crate::envs::{CrafterEnv, CrafterWorld, Env, EnvError, FrozenLakeBoard, FrozenLakeEnv};
use crate::harness::{
    aggregate_metrics, load_run_summaries, render_metrics_csv, run_budget, write_run_record,
    HarnessError, DEFAULT_STEP_BUDGET,
};
use crate::llm::{
    Backend, FactVisibility, HttpBackend, HttpConfig, LlmError, OracleBackend, OracleModel,
    ReplayBackend,
};
use crate::planner::PlanConfig;
use crate::theory::{render_sweep_csv, run_sweep, SweepSpec, TheoryError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::InvalidArgument(_) => "invalid_argument",
            CliError::Env(_) => "env",
            CliError::Agent(_) => "agent",
            CliError::Harness(_) => "harness",
            CliError::Theory(_) => "theory",
            CliError::Llm(_) => "llm",
            CliError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lwm",
    about = "Fact-learning agents on text gridworlds, plus abstraction bound checks"
)]
pub struct Cli {
    /// Flat key = value config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one agent on one environment under a global step budget.
    Run(RunArgs),
    /// Aggregate finished runs into a metrics CSV.
    Eval(EvalArgs),
    /// Verify the abstraction value-loss bound on random tabular MDPs.
    Theory(TheoryArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Environment: frozenlake | crafter.
    #[arg(long)]
    pub env: Option<String>,
    /// Agent: random | react | reflexion | react_fec | lwm.
    #[arg(long)]
    pub agent: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Global step budget for the run.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Lookahead depth for the planning agent.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Proposals per search node.
    #[arg(long)]
    pub branch: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "step-penalty")]
    pub step_penalty: Option<f64>,
    /// Backend: http | oracle | oracle-facts | replay.
    #[arg(long)]
    pub backend: Option<String>,
    /// Fact compression after each episode: on | off.
    #[arg(long)]
    pub compress: Option<String>,
    /// Board fixture file; defaults to the built-in reference board.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Output directory for run records.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write plan_trace.jsonl with per-node search records (lwm agent).
    #[arg(long)]
    pub trace: bool,
    /// Cassette file for the replay backend.
    #[arg(long)]
    pub cassette: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    /// Directory holding run subdirectories.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expert anchor override for normalization.
    #[arg(long)]
    pub expert: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TheoryArgs {
    /// Sweep spec file (flat key = value); defaults apply when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const KNOWN_CONFIG_KEYS: &[&str] = &[
    "env",
    "agent",
    "seed",
    "steps",
    "depth",
    "branch",
    "gamma",
    "step-penalty",
    "backend",
    "compress",
    "fixture",
    "out",
    "trace",
    "cassette",
    "runs",
    "spec",
    "expert",
];

/// Parse `key = value` lines into a map; `#` starts a comment.
pub fn parse_flat_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::InvalidArgument(format!(
                "config line {}: expected key = value, got {raw:?}",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::InvalidArgument(format!(
                "config line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn load_config(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>, CliError> {
    match path {
        Some(p) => parse_flat_config(&fs::read_to_string(p)?),
        None => Ok(BTreeMap::new()),
    }
}

fn cfg_parse<T: std::str::FromStr>(
    cfg: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match cfg.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
            CliError::InvalidArgument(format!("config key {key}: {e}"))
        }),
    }
}

fn parse_switch(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw.to_ascii_lowercase().as_str() {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(CliError::InvalidArgument(format!(
            "{key} must be on or off, got {other:?}"
        ))),
    }
}

/// Fully resolved `run` settings after flag > config > default layering.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub env: String,
    pub agent: String,
    pub seed: u64,
    pub steps: usize,
    pub depth: u32,
    pub branch: usize,
    pub gamma: f64,
    pub step_penalty: f64,
    pub backend: String,
    pub compress: bool,
    pub fixture: Option<PathBuf>,
    pub out: PathBuf,
    pub trace: bool,
    pub cassette: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self, cfg: &BTreeMap<String, String>) -> Result<ResolvedRun, CliError> {
        let compress_raw = self
            .compress
            .clone()
            .or_else(|| cfg.get("compress").cloned())
            .unwrap_or_else(|| "on".into());
        let trace = self.trace
            || match cfg.get("trace") {
                Some(raw) => parse_switch("trace", raw)?,
                None => false,
            };
        Ok(ResolvedRun {
            env: self
                .env
                .clone()
                .or_else(|| cfg.get("env").cloned())
                .unwrap_or_else(|| "frozenlake".into()),
            agent: self
                .agent
                .clone()
                .or_else(|| cfg.get("agent").cloned())
                .unwrap_or_else(|| "lwm".into()),
            seed: match self.seed {
                Some(s) => s,
                None => cfg_parse(cfg, "seed")?.unwrap_or(0),
            },
            steps: match self.steps {
                Some(s) => s,
                None => cfg_parse(cfg, "steps")?.unwrap_or(DEFAULT_STEP_BUDGET),
            },
            depth: match self.depth {
                Some(d) => d,
                None => cfg_parse(cfg, "depth")?.unwrap_or(3),
            },
            branch: match self.branch {
                Some(b) => b,
                None => cfg_parse(cfg, "branch")?.unwrap_or(4),
            },
            gamma: match self.gamma {
                Some(g) => g,
                None => cfg_parse(cfg, "gamma")?.unwrap_or(0.99),
            },
            step_penalty: match self.step_penalty {
                Some(p) => p,
                None => cfg_parse(cfg, "step-penalty")?.unwrap_or(0.01),
            },
            backend: self
                .backend
                .clone()
                .or_else(|| cfg.get("backend").cloned())
                .unwrap_or_else(|| "oracle".into()),
            compress: parse_switch("compress", &compress_raw)?,
            fixture: self
                .fixture
                .clone()
                .or_else(|| cfg.get("fixture").map(PathBuf::from)),
            out: self
                .out
                .clone()
                .or_else(|| cfg.get("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("runs")),
            trace,
            cassette: self
                .cassette
                .clone()
                .or_else(|| cfg.get("cassette").map(PathBuf::from)),
        })
    }
}

enum WorldModel {
    Lake(FrozenLakeBoard),
    Crafter(CrafterWorld),
}

fn load_world(resolved: &ResolvedRun) -> Result<WorldModel, CliError> {
    match resolved.env.as_str() {
        "frozenlake" => {
            let board = match &resolved.fixture {
                Some(path) => FrozenLakeBoard::parse_fixture(&fs::read_to_string(path)?)?,
                None => reference_lake(),
            };
            Ok(WorldModel::Lake(board))
        }
        "crafter" => {
            let world = match &resolved.fixture {
                Some(path) => CrafterWorld::parse_fixture(&fs::read_to_string(path)?)?,
                None => reference_crafter(),
            };
            Ok(WorldModel::Crafter(world))
        }
        other => Err(CliError::InvalidArgument(format!(
            "unknown env {other:?}; expected frozenlake or crafter"
        ))),
    }
}

fn make_env(world: &WorldModel) -> Box<dyn Env> {
    match world {
        WorldModel::Lake(board) => Box::new(FrozenLakeEnv::new(board.clone())),
        WorldModel::Crafter(w) => Box::new(CrafterEnv::new(w.clone())),
    }
}

fn make_backend(
    world: &WorldModel,
    resolved: &ResolvedRun,
) -> Result<Box<dyn Backend>, CliError> {
    let oracle = |visibility: FactVisibility| -> Box<dyn Backend> {
        let model = match world {
            WorldModel::Lake(board) => OracleModel::FrozenLake(board.clone()),
            WorldModel::Crafter(w) => OracleModel::Crafter(w.clone()),
        };
        Box::new(OracleBackend::with_params(
            model,
            visibility,
            resolved.gamma,
            resolved.step_penalty,
        ))
    };
    match resolved.backend.as_str() {
        "oracle" => Ok(oracle(FactVisibility::Full)),
        "oracle-facts" => Ok(oracle(FactVisibility::FactsOnly)),
        "replay" => {
            let path = resolved.cassette.as_ref().ok_or_else(|| {
                CliError::InvalidArgument(
                    "the replay backend needs --cassette PATH".into(),
                )
            })?;
            Ok(Box::new(ReplayBackend::load(path)?))
        }
        "http" => Ok(Box::new(HttpBackend::new(HttpConfig::from_env()?)?)),
        other => Err(CliError::InvalidArgument(format!(
            "unknown backend {other:?}; expected http, oracle, oracle-facts, or replay"
        ))),
    }
}

/// Execute a resolved run and return the run directory.
pub fn execute_run(resolved: &ResolvedRun) -> Result<PathBuf, CliError> {
    let world = load_world(resolved)?;
    let mut env = make_env(&world);
    let spec = env.spec().clone();

    if resolved.agent == "random" {
        let mut agent = RandomAgent::new(&spec, resolved.seed);
        let record = run_budget(&mut agent, env.as_mut(), resolved.seed, resolved.steps)?;
        return Ok(write_run_record(&record, &resolved.out)?);
    }

    let backend = make_backend(&world, resolved)?;
    match resolved.agent.as_str() {
        "lwm" => {
            let plan_cfg = PlanConfig {
                depth: resolved.depth,
                branch: resolved.branch,
                gamma: resolved.gamma,
                lambda_step: resolved.step_penalty,
            };
            let mut agent = LwmAgent::new(backend, &spec, plan_cfg, resolved.seed)?;
            agent.set_compress_enabled(resolved.compress);
            agent.set_tracing(resolved.trace);
            let record = run_budget(&mut agent, env.as_mut(), resolved.seed, resolved.steps)?;
            let dir = write_run_record(&record, &resolved.out)?;
            if resolved.trace {
                let mut jsonl = String::new();
                for rec in agent.take_trace() {
                    jsonl.push_str(&serde_json::to_string(&rec).map_err(HarnessError::from)?);
                    jsonl.push('\n');
                }
                fs::write(dir.join("plan_trace.jsonl"), jsonl)?;
            }
            Ok(dir)
        }
        "react" => {
            let mut agent = ReactAgent::new(backend, &spec, resolved.seed);
            let record = run_budget(&mut agent, env.as_mut(), resolved.seed, resolved.steps)?;
            Ok(write_run_record(&record, &resolved.out)?)
        }
        "reflexion" => {
            let mut agent = ReflexionAgent::new(backend, &spec, resolved.seed);
            let record = run_budget(&mut agent, env.as_mut(), resolved.seed, resolved.steps)?;
            Ok(write_run_record(&record, &resolved.out)?)
        }
        "react_fec" => {
            let mut agent = ReactFecAgent::new(backend, &spec, resolved.seed);
            agent.set_compress_enabled(resolved.compress);
            let record = run_budget(&mut agent, env.as_mut(), resolved.seed, resolved.steps)?;
            Ok(write_run_record(&record, &resolved.out)?)
        }
        other => Err(CliError::InvalidArgument(format!(
            "unknown agent {other:?}; expected random, react, reflexion, react_fec, or lwm"
        ))),
    }
}

fn cmd_run(args: &RunArgs, cfg: &BTreeMap<String, String>) -> Result<(), CliError> {
    let resolved = args.resolve(cfg)?;
    let dir = execute_run(&resolved)?;
    let summary = fs::read_to_string(dir.join("summary.json"))?;
    println!("{summary}");
    println!("run written to {}", dir.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs, cfg: &BTreeMap<String, String>) -> Result<(), CliError> {
    let runs = args
        .runs
        .clone()
        .or_else(|| cfg.get("runs").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let out = args
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("table.csv"));
    let expert = match args.expert {
        Some(e) => Some(e),
        None => cfg_parse(cfg, "expert")?,
    };
    let summaries = load_run_summaries(&runs)?;
    if summaries.is_empty() {
        return Err(CliError::InvalidArgument(format!(
            "no summary.json files under {}",
            runs.display()
        )));
    }
    let rows = aggregate_metrics(&summaries, expert)?;
    let csv = render_metrics_csv(&rows);
    fs::write(&out, &csv)?;
    print!("{csv}");
    println!("table written to {}", out.display());
    Ok(())
}

fn cmd_theory(args: &TheoryArgs, cfg: &BTreeMap<String, String>) -> Result<(), CliError> {
    let spec_path = args
        .spec
        .clone()
        .or_else(|| cfg.get("spec").map(PathBuf::from));
    let spec = match spec_path {
        Some(path) => SweepSpec::parse(&fs::read_to_string(path)?)?,
        None => SweepSpec::default(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("theory_report.csv"));
    let rows = run_sweep(&spec)?;
    let holds = rows.iter().filter(|r| r.holds).count();
    let csv = render_sweep_csv(&rows);
    fs::write(&out, &csv)?;
    println!(
        "{holds}/{} instances uphold the bound; report written to {}",
        rows.len(),
        out.display()
    );
    if holds < rows.len() {
        return Err(CliError::InvalidArgument(format!(
            "{} instances violated the bound",
            rows.len() - holds
        )));
    }
    Ok(())
}

/// Parse and execute one invocation.
pub fn run_cli<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)
        .map_err(|e| CliError::InvalidArgument(e.to_string()))?;
    let cfg = load_config(&cli.config)?;
    match &cli.command {
        Command::Run(a) => cmd_run(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
        Command::Theory(a) => cmd_theory(a, &cfg),
    }
}

/// Binary entry point: structured error reporting on stderr, nonzero
/// exit on failure.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Help and version requests are not errors.
    if let Err(e) = Cli::try_parse_from(std::env::args()) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            print!("{e}");
            return std::process::ExitCode::SUCCESS;
        }
    }
    match run_cli(std::env::args()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{record}");
            std::process::ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: RunArgs, cfg: &[(&str, &str)]) -> ResolvedRun {
        let map: BTreeMap<String, String> = cfg
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        args.resolve(&map).unwrap()
    }

    #[test]
    fn config_parses_and_rejects_unknown_keys() {
        let cfg = parse_flat_config("# comment\nagent = lwm\nsteps = 40 # inline\n").unwrap();
        assert_eq!(cfg.get("agent").unwrap(), "lwm");
        assert_eq!(cfg.get("steps").unwrap(), "40");
        assert!(parse_flat_config("bogus = 1").is_err());
        assert!(parse_flat_config("agent lwm").is_err());
    }

    #[test]
    fn flags_override_config_which_overrides_defaults() {
        let r = resolve(RunArgs::default(), &[]);
        assert_eq!(r.env, "frozenlake");
        assert_eq!(r.agent, "lwm");
        assert_eq!(r.steps, 300);
        assert_eq!(r.depth, 3);
        assert_eq!(r.branch, 4);
        assert_eq!(r.gamma, 0.99);
        assert_eq!(r.step_penalty, 0.01);
        assert_eq!(r.backend, "oracle");
        assert!(r.compress);
        assert!(!r.trace);

        let r = resolve(
            RunArgs::default(),
            &[("seed", "5"), ("compress", "off"), ("trace", "on")],
        );
        assert_eq!(r.seed, 5);
        assert!(!r.compress);
        assert!(r.trace);

        let r = resolve(
            RunArgs {
                seed: Some(9),
                compress: Some("on".into()),
                ..Default::default()
            },
            &[("seed", "5"), ("compress", "off")],
        );
        assert_eq!(r.seed, 9);
        assert!(r.compress);
    }

    #[test]
    fn spec_flag_shapes_parse() {
        let cli = Cli::try_parse_from([
            "lwm",
            "run",
            "--env",
            "frozenlake",
            "--agent",
            "lwm",
            "--seed",
            "3",
            "--steps",
            "300",
            "--depth",
            "3",
            "--branch",
            "4",
            "--gamma",
            "0.99",
            "--step-penalty",
            "0.01",
            "--backend",
            "oracle",
            "--compress",
            "on",
            "--out",
            "runs",
            "--trace",
        ])
        .unwrap();
        match cli.command {
            Command::Run(args) => {
                assert_eq!(args.env.as_deref(), Some("frozenlake"));
                assert_eq!(args.step_penalty, Some(0.01));
                assert!(args.trace);
            }
            _ => panic!("expected run"),
        }
        assert!(Cli::try_parse_from(["lwm", "eval", "--runs", "r", "--out", "t.csv"]).is_ok());
        assert!(Cli::try_parse_from(["lwm", "theory", "--spec", "s.txt"]).is_ok());
    }

    #[test]
    fn run_writes_records_and_traces() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("runs");
        let resolved = resolve(
            RunArgs {
                agent: Some("lwm".into()),
                steps: Some(30),
                trace: true,
                out: Some(out.clone()),
                ..Default::default()
            },
            &[],
        );
        let dir = execute_run(&resolved).unwrap();
        assert!(dir.join("summary.json").is_file());
        assert!(dir.join("transitions.jsonl").is_file());
        let trace = fs::read_to_string(dir.join("plan_trace.jsonl")).unwrap();
        assert!(trace.lines().count() > 0);
        let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
        for key in ["depth", "obs", "action", "r", "v_next", "q"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn eval_aggregates_run_directories() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("runs");
        for agent in ["random", "lwm"] {
            let resolved = resolve(
                RunArgs {
                    agent: Some(agent.into()),
                    steps: Some(30),
                    out: Some(out.clone()),
                    ..Default::default()
                },
                &[],
            );
            execute_run(&resolved).unwrap();
        }
        let table = tmp.path().join("table.csv");
        let args = EvalArgs {
            runs: Some(out),
            out: Some(table.clone()),
            expert: None,
        };
        cmd_eval(&args, &BTreeMap::new()).unwrap();
        let csv = fs::read_to_string(&table).unwrap();
        assert!(csv.starts_with("agent,env,metric,mean,ci95,n\n"));
        assert!(csv.contains("lwm,frozenlake_4x4,normalized_score,100.0000"));
        assert!(csv.contains("random,frozenlake_4x4,normalized_score,0.0000"));
    }

    #[test]
    fn theory_command_writes_a_report() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = tmp.path().join("sweep.txt");
        fs::write(&spec, "instances = 5\nmax_states = 8\nseed = 2\n").unwrap();
        let out = tmp.path().join("report.csv");
        let args = TheoryArgs {
            spec: Some(spec),
            out: Some(out.clone()),
        };
        cmd_theory(&args, &BTreeMap::new()).unwrap();
        let csv = fs::read_to_string(&out).unwrap();
        assert!(csv.starts_with("# eps_sim ="));
        assert_eq!(csv.lines().count(), 7);
        assert!(!csv.contains("false"));
    }

    #[test]
    fn bad_names_and_missing_cassette_error_out() {
        let base = resolve(RunArgs::default(), &[]);
        let mut bad_env = base.clone();
        bad_env.env = "minecraft".into();
        assert!(matches!(
            execute_run(&bad_env),
            Err(CliError::InvalidArgument(_))
        ));

        let mut bad_agent = base.clone();
        bad_agent.agent = "sarsa".into();
        assert!(execute_run(&bad_agent).is_err());

        let mut bad_backend = base.clone();
        bad_backend.backend = "psychic".into();
        assert!(execute_run(&bad_backend).is_err());

        let mut replay = base;
        replay.backend = "replay".into();
        replay.cassette = None;
        assert!(matches!(
            execute_run(&replay),
            Err(CliError::InvalidArgument(_))
        ));
    }
}
