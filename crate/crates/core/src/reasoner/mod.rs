//! Reasoners choose the next step of a proof: a justification plus one
//! action. Three implementations share the [`Reasoner`] trait:
//!
//! - [`ScriptedReasoner`] replays a fixed trajectory
//! - [`RuleReasoner`] forward-chains a small set of Euclidean rules and
//!   searches for auxiliary constructions
//! - [`external::ExternalReasoner`] asks an outside agent over HTTP or a pipe

pub mod diagram;
pub mod external;
pub mod facts;
pub mod goal;
pub mod prover;
pub mod rules;

use std::time::Duration;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::action::{action_from_value, Action};
use crate::canonical;
use crate::logic_form::LogicForm;

pub use facts::{Fact, FactSet, Provenance, Statement};
pub use goal::{parse_goal, Goal};
pub use prover::{propose_construction, Candidate, RuleReasoner};
pub use rules::{audit, derive_facts, Rule, RuleSet};

/// What a reasoner sees at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerInput {
    pub problem_text: String,
    pub current_form: LogicForm,
    pub history: Vec<StepOutput>,
    /// Always `history.len()`.
    pub step_index: usize,
}

impl ReasonerInput {
    pub fn new(problem_text: &str, current_form: LogicForm, history: Vec<StepOutput>) -> Self {
        Self {
            problem_text: problem_text.to_string(),
            current_form,
            step_index: history.len(),
            history,
        }
    }

    /// Request body for external agents.
    pub fn to_wire(&self, svg: &str) -> Value {
        json!({
            "problem_text": self.problem_text,
            "logic_form": self.current_form.to_value(),
            "svg": svg,
            "history": self.history.iter().map(StepOutput::to_value).collect::<Vec<_>>(),
            "step_index": self.step_index,
        })
    }
}

/// One reasoning step: exactly `{"reasoning": .., "action": {..}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub reasoning: String,
    pub action: Action,
}

impl StepOutput {
    pub fn new(reasoning: impl Into<String>, action: Action) -> Self {
        Self {
            reasoning: reasoning.into(),
            action,
        }
    }

    pub fn to_value(&self) -> Value {
        json!({"reasoning": self.reasoning, "action": self.action.to_value()})
    }

    pub fn to_canonical_string(&self) -> String {
        canonical::to_string(&self.to_value())
    }

    /// Strict decoding: no extra keys, nonempty reasoning, valid action.
    pub fn from_value(v: &Value) -> Result<Self, String> {
        let obj: &Map<String, Value> = v.as_object().ok_or("step must be a JSON object")?;
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        if keys != ["action", "reasoning"] {
            return Err(format!("step must have exactly `reasoning` and `action`, got {keys:?}"));
        }
        let reasoning = obj["reasoning"].as_str().ok_or("`reasoning` must be a string")?;
        if reasoning.trim().is_empty() {
            return Err("`reasoning` must be nonempty".into());
        }
        let action = action_from_value(&obj["action"]).map_err(|e| e.to_string())?;
        Ok(Self::new(reasoning, action))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(text.trim()).map_err(|e| format!("not JSON: {e}"))?;
        Self::from_value(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    /// No applicable step remains.
    #[error("reasoner exhausted: {0}")]
    Exhausted(String),
    /// The reply did not follow the step schema; `raw` is kept for logs.
    #[error("protocol error: {reason}")]
    Protocol { raw: String, reason: String },
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
}

pub trait Reasoner {
    fn next_step(&mut self, input: &ReasonerInput) -> Result<StepOutput, ReasonerError>;
}

impl<R: Reasoner + ?Sized> Reasoner for Box<R> {
    fn next_step(&mut self, input: &ReasonerInput) -> Result<StepOutput, ReasonerError> {
        (**self).next_step(input)
    }
}

/// Replays raw step documents; entry `k` answers step `k`. Entries are
/// decoded strictly at replay time, so a malformed entry surfaces as a
/// protocol error.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedReasoner {
    steps: Vec<Value>,
}

impl ScriptedReasoner {
    pub fn new(steps: Vec<Value>) -> Self {
        Self { steps }
    }

    pub fn from_outputs(steps: &[StepOutput]) -> Self {
        Self::new(steps.iter().map(StepOutput::to_value).collect())
    }

    /// A JSON array of step documents.
    pub fn from_json(text: &str) -> Result<Self, String> {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Array(steps)) => Ok(Self::new(steps)),
            Ok(_) => Err("script must be a JSON array of steps".into()),
            Err(e) => Err(format!("script is not JSON: {e}")),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl Reasoner for ScriptedReasoner {
    fn next_step(&mut self, input: &ReasonerInput) -> Result<StepOutput, ReasonerError> {
        let raw = self.steps.get(input.step_index).ok_or_else(|| {
            ReasonerError::Exhausted(format!("script has {} steps", self.steps.len()))
        })?;
        StepOutput::from_value(raw).map_err(|reason| ReasonerError::Protocol {
            raw: canonical::to_string(raw),
            reason,
        })
    }
}

/// Never produces a step.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbstainReasoner;

impl Reasoner for AbstainReasoner {
    fn next_step(&mut self, _: &ReasonerInput) -> Result<StepOutput, ReasonerError> {
        Err(ReasonerError::Exhausted("abstains".into()))
    }
}
