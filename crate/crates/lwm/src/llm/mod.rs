//! Backend-agnostic structured function calling.
//!
//! Every model interaction is a single-shot call that forces one named
//! function and returns its arguments as a typed record. Backends are
//! interchangeable: a live HTTP endpoint, a deterministic oracle bound to
//! an environment model, or a record/replay cassette store.

pub mod counting;
pub mod http;
pub mod oracle;
pub mod prompts;
pub mod replay;
pub mod scripted;

pub use counting::CountingBackend;
pub use http::{HttpBackend, HttpConfig};
pub use oracle::{FactVisibility, OracleBackend, OracleModel};
pub use replay::{RecordingBackend, ReplayBackend};
pub use scripted::ScriptedBackend;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    /// Malformed tool-call payload (bad JSON or schema-invalid arguments).
    #[error("parse error: {0}")]
    Parse(String),
    /// Transport failure after the retry policy was exhausted.
    #[error("backend error: {0}")]
    Backend(String),
    /// The call or result violates the function-calling contract.
    #[error("contract error: {0}")]
    Contract(String),
    /// Replay backend has no recording for the requested key.
    #[error("missing cassette entry: {0}")]
    MissingCassette(String),
    /// Oracle could not parse an observation it was asked to simulate from.
    #[error("simulation error: {0}")]
    Simulation(String),
    /// Oracle could not parse an observation it was asked to evaluate.
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The seven callable functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    ProposeActions,
    SimulateStep,
    EstimateValue,
    FactExtraction,
    FactRedundancyRemover,
    ReactStep,
    Reflect,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 7] = [
        FunctionKind::ProposeActions,
        FunctionKind::SimulateStep,
        FunctionKind::EstimateValue,
        FunctionKind::FactExtraction,
        FunctionKind::FactRedundancyRemover,
        FunctionKind::ReactStep,
        FunctionKind::Reflect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::ProposeActions => "propose_actions",
            FunctionKind::SimulateStep => "simulate_step",
            FunctionKind::EstimateValue => "estimate_value",
            FunctionKind::FactExtraction => "fact_extraction",
            FunctionKind::FactRedundancyRemover => "fact_redundancy_remover",
            FunctionKind::ReactStep => "react_step",
            FunctionKind::Reflect => "reflect",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// System message paired with this function.
    pub fn system_message(self) -> String {
        match self {
            FunctionKind::FactExtraction
            | FunctionKind::FactRedundancyRemover
            | FunctionKind::Reflect => "You are an expert agent.".to_string(),
            other => format!("You must call {}.", other.name()),
        }
    }

    /// JSON schema for the function's arguments, wire-format compatible
    /// with OpenAI-style `tools` entries.
    pub fn parameters_schema(self) -> serde_json::Value {
        use serde_json::json;
        match self {
            FunctionKind::ProposeActions => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning for selecting these actions."},
                    "actions": {"type": "array", "items": {"type": "string"}, "description": "The proposed actions."}
                },
                "required": ["thought", "actions"]
            }),
            FunctionKind::SimulateStep => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning for the predicted outcome."},
                    "next_observation": {"type": "string", "description": "The predicted (perhaps latent) observation after the action."},
                    "reward": {"type": "number", "description": "The predicted immediate reward (float) after the action."},
                    "done": {"type": "boolean", "description": "True if the resulting state ends the episode (terminal), false otherwise."}
                },
                "required": ["thought", "next_observation", "reward", "done"]
            }),
            FunctionKind::EstimateValue => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning for this value estimate."},
                    "value": {"type": "number", "description": "The estimated state value (float). The cumulative future reward from the current (perhaps latent) observation."}
                },
                "required": ["thought", "value"]
            }),
            FunctionKind::FactExtraction => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning process for identifying these new facts."},
                    "new_facts": {"type": "array", "items": {"type": "string"}, "description": "The list of newly extracted atomic facts. If no new critical facts are found, provide an empty list."}
                },
                "required": ["thought", "new_facts"]
            }),
            FunctionKind::FactRedundancyRemover => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning for the compression and refinement decisions."},
                    "all_facts": {"type": "array", "items": {"type": "string"}, "description": "The refined, concise list of essential atomic facts."}
                },
                "required": ["thought", "all_facts"]
            }),
            FunctionKind::ReactStep => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning for choosing this action."},
                    "action": {"type": "string", "description": "The chosen action."}
                },
                "required": ["thought", "action"]
            }),
            FunctionKind::Reflect => json!({
                "type": "object",
                "properties": {
                    "thought": {"type": "string", "description": "Your reasoning about what went right or wrong this episode."},
                    "lesson": {"type": "string", "description": "One concise, actionable lesson of at most 20 words."}
                },
                "required": ["thought", "lesson"]
            }),
        }
    }
}

/// Default token ceiling for a single response.
pub const DEFAULT_MAX_TOKENS: u32 = 8512;
/// Temperature for planner and fact calls.
pub const PLANNER_TEMPERATURE: f64 = 0.0;
/// Temperature for thought-then-act calls.
pub const REACT_TEMPERATURE: f64 = 0.3;

/// One single-shot structured call.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmCall {
    pub function: FunctionKind,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmCall {
    pub fn new(function: FunctionKind, user: String, temperature: f64) -> Self {
        Self {
            function,
            system: function.system_message(),
            user,
            temperature,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposeActionsResult {
    pub thought: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateStepResult {
    pub thought: String,
    pub next_observation: String,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateValueResult {
    pub thought: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactExtractionResult {
    pub thought: String,
    pub new_facts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactRedundancyRemoverResult {
    pub thought: String,
    pub all_facts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactStepResult {
    pub thought: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectResult {
    pub thought: String,
    pub lesson: String,
}

/// Typed result of a completed call.
#[derive(Debug, Clone, PartialEq)]
pub enum LlmResult {
    ProposeActions(ProposeActionsResult),
    SimulateStep(SimulateStepResult),
    EstimateValue(EstimateValueResult),
    FactExtraction(FactExtractionResult),
    FactRedundancyRemover(FactRedundancyRemoverResult),
    ReactStep(ReactStepResult),
    Reflect(ReflectResult),
}

impl LlmResult {
    pub fn kind(&self) -> FunctionKind {
        match self {
            LlmResult::ProposeActions(_) => FunctionKind::ProposeActions,
            LlmResult::SimulateStep(_) => FunctionKind::SimulateStep,
            LlmResult::EstimateValue(_) => FunctionKind::EstimateValue,
            LlmResult::FactExtraction(_) => FunctionKind::FactExtraction,
            LlmResult::FactRedundancyRemover(_) => FunctionKind::FactRedundancyRemover,
            LlmResult::ReactStep(_) => FunctionKind::ReactStep,
            LlmResult::Reflect(_) => FunctionKind::Reflect,
        }
    }

    /// Serialize the arguments record (without the function tag).
    pub fn to_arguments(&self) -> serde_json::Value {
        fn ser<T: Serialize>(v: &T) -> serde_json::Value {
            serde_json::to_value(v).expect("result serializes")
        }
        match self {
            LlmResult::ProposeActions(r) => ser(r),
            LlmResult::SimulateStep(r) => ser(r),
            LlmResult::EstimateValue(r) => ser(r),
            LlmResult::FactExtraction(r) => ser(r),
            LlmResult::FactRedundancyRemover(r) => ser(r),
            LlmResult::ReactStep(r) => ser(r),
            LlmResult::Reflect(r) => ser(r),
        }
    }

    /// Parse an arguments record against the schema of `function`.
    /// Missing or extra fields are errors.
    pub fn from_arguments(
        function: FunctionKind,
        arguments: &serde_json::Value,
    ) -> Result<Self, LlmError> {
        fn de<T: for<'de> Deserialize<'de>>(v: &serde_json::Value) -> Result<T, LlmError> {
            serde_json::from_value(v.clone()).map_err(|e| LlmError::Parse(e.to_string()))
        }
        Ok(match function {
            FunctionKind::ProposeActions => LlmResult::ProposeActions(de(arguments)?),
            FunctionKind::SimulateStep => LlmResult::SimulateStep(de(arguments)?),
            FunctionKind::EstimateValue => LlmResult::EstimateValue(de(arguments)?),
            FunctionKind::FactExtraction => LlmResult::FactExtraction(de(arguments)?),
            FunctionKind::FactRedundancyRemover => {
                LlmResult::FactRedundancyRemover(de(arguments)?)
            }
            FunctionKind::ReactStep => LlmResult::ReactStep(de(arguments)?),
            FunctionKind::Reflect => LlmResult::Reflect(de(arguments)?),
        })
    }

    pub fn expect_propose(self) -> Result<ProposeActionsResult, LlmError> {
        match self {
            LlmResult::ProposeActions(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::ProposeActions, &other)),
        }
    }

    pub fn expect_simulate(self) -> Result<SimulateStepResult, LlmError> {
        match self {
            LlmResult::SimulateStep(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::SimulateStep, &other)),
        }
    }

    pub fn expect_value(self) -> Result<EstimateValueResult, LlmError> {
        match self {
            LlmResult::EstimateValue(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::EstimateValue, &other)),
        }
    }

    pub fn expect_facts(self) -> Result<FactExtractionResult, LlmError> {
        match self {
            LlmResult::FactExtraction(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::FactExtraction, &other)),
        }
    }

    pub fn expect_compressed(self) -> Result<FactRedundancyRemoverResult, LlmError> {
        match self {
            LlmResult::FactRedundancyRemover(r) => Ok(r),
            other => Err(contract_mismatch(
                FunctionKind::FactRedundancyRemover,
                &other,
            )),
        }
    }

    pub fn expect_react(self) -> Result<ReactStepResult, LlmError> {
        match self {
            LlmResult::ReactStep(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::ReactStep, &other)),
        }
    }

    pub fn expect_reflect(self) -> Result<ReflectResult, LlmError> {
        match self {
            LlmResult::Reflect(r) => Ok(r),
            other => Err(contract_mismatch(FunctionKind::Reflect, &other)),
        }
    }
}

fn contract_mismatch(wanted: FunctionKind, got: &LlmResult) -> LlmError {
    LlmError::Contract(format!(
        "expected {} result, got {}",
        wanted.name(),
        got.kind().name()
    ))
}

/// A structured-call completion provider.
///
/// Implementations guard any internal state so `complete` can be called
/// from multiple threads.
pub trait Backend: Send + Sync {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError>;
    /// Short label for logs and run records.
    fn label(&self) -> String;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        (**self).complete(call)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, call: &LlmCall) -> Result<LlmResult, LlmError> {
        (**self).complete(call)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

/// Normalize a prompt for cache identity: CRLF to LF, trailing whitespace
/// stripped per line, trailing newlines stripped.
pub fn canonicalize_prompt(text: &str) -> String {
    let unified = text.replace("\r\n", "\n");
    let mut lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
    while lines.last() == Some(&"") {
        lines.pop();
    }
    lines.join("\n")
}

/// Cassette key: SHA-256 over function name, canonicalized user prompt,
/// and temperature.
pub fn cassette_key(function: FunctionKind, user_prompt: &str, temperature: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(function.name().as_bytes());
    hasher.update(b"\n");
    hasher.update(canonicalize_prompt(user_prompt).as_bytes());
    hasher.update(b"\n");
    hasher.update(format!("{temperature}").as_bytes());
    hex::encode(hasher.finalize())
}
