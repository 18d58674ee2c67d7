//! Episodes, rewards and benchmark scoring.
//!
//! A problem file is line-delimited JSON, one problem per line:
//!
//! ```text
//! {"id": "p1", "text": "..", "initial_form": {..} | "form.json",
//!  "answer_type": "Numerical", "gold_answer": 30, "unit": "degrees",
//!  "aliases": [..], "gold_proof": [{"reasoning": .., "action": {..}}, ..]}
//! ```
//!
//! `unit`, `aliases` and `gold_proof` are optional. A string `initial_form`
//! is a path relative to the problem file.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::action::execute;
use crate::answer::{AnswerType, AnswerValue};
use crate::logic_form::{logic_form_from_value, parse_logic_form, LogicForm};
use crate::reasoner::{Reasoner, ReasonerError, ReasonerInput, StepOutput};

pub const DEFAULT_MAX_STEPS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub text: String,
    pub initial_form: LogicForm,
    pub answer_type: AnswerType,
    pub gold_answer: AnswerValue,
    /// Extra accepted spellings for Descriptor answers.
    pub aliases: Vec<String>,
    pub gold_proof: Option<Vec<StepOutput>>,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("duplicate problem id `{0}`")]
    DuplicateProblemId(String),
}

const PROBLEM_KEYS: [&str; 8] = [
    "aliases",
    "answer_type",
    "gold_answer",
    "gold_proof",
    "id",
    "initial_form",
    "text",
    "unit",
];

fn problem_from_value(v: &Value, base: Option<&Path>) -> Result<Problem, String> {
    let obj: &Map<String, Value> = v.as_object().ok_or("problem must be a JSON object")?;
    if let Some(k) = obj.keys().find(|k| !PROBLEM_KEYS.contains(&k.as_str())) {
        return Err(format!("unknown key `{k}`"));
    }
    let text_field = |k: &str| -> Result<String, String> {
        obj.get(k)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("missing string field `{k}`"))
    };
    let id = text_field("id")?;
    if id.trim().is_empty() {
        return Err("`id` must be nonempty".into());
    }
    let text = text_field("text")?;
    let answer_type = AnswerType::parse(&text_field("answer_type")?)
        .ok_or("`answer_type` must be Numerical, Ratio or Descriptor")?;

    let initial_form = match obj.get("initial_form") {
        Some(Value::String(rel)) => {
            let path = base.map_or_else(|| PathBuf::from(rel), |b| b.join(rel));
            let doc = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read form {}: {e}", path.display()))?;
            parse_logic_form(&doc).map_err(|e| format!("form {}: {e}", path.display()))?
        }
        Some(v @ Value::Object(_)) => logic_form_from_value(v).map_err(|e| format!("initial_form: {e}"))?,
        _ => return Err("`initial_form` must be an object or a path".into()),
    };

    let unit = match obj.get("unit") {
        None | Some(Value::Null) => None,
        Some(Value::String(u)) => Some(u.as_str()),
        Some(_) => return Err("`unit` must be a string".into()),
    };
    let gold_answer = match obj.get("gold_answer") {
        Some(Value::Number(n)) if answer_type == AnswerType::Numerical => AnswerValue::Numerical {
            value: n.as_f64().ok_or("bad number")?,
            unit: unit.map(str::to_string),
        },
        Some(Value::String(s)) => {
            AnswerValue::parse_as(s, answer_type, unit).map_err(|e| format!("gold_answer: {e}"))?
        }
        _ => return Err(format!("`gold_answer` does not fit answer type {answer_type}")),
    };

    let aliases = match obj.get("aliases") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or("aliases must be strings"))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err("`aliases` must be a list".into()),
    };
    let gold_proof = match obj.get("gold_proof") {
        None | Some(Value::Null) => None,
        Some(Value::Array(steps)) => Some(
            steps
                .iter()
                .enumerate()
                .map(|(i, s)| StepOutput::from_value(s).map_err(|e| format!("gold_proof[{i}]: {e}")))
                .collect::<Result<_, _>>()?,
        ),
        Some(_) => return Err("`gold_proof` must be a list of steps".into()),
    };

    Ok(Problem {
        id,
        text,
        initial_form,
        answer_type,
        gold_answer,
        aliases,
        gold_proof,
    })
}

/// Parse a problem file's contents. Blank lines are skipped. A file holding
/// one pretty-printed problem object is accepted too.
pub fn parse_problems(text: &str, base: Option<&Path>) -> Result<Vec<Problem>, ProblemError> {
    let whole: Option<Value> = serde_json::from_str(text).ok();
    let entries: Vec<(usize, Value)> = match whole {
        Some(v @ Value::Object(_)) => vec![(1, v)],
        _ => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map(|v| (i + 1, v))
                    .map_err(|e| ProblemError::Line { line: i + 1, reason: format!("not JSON: {e}") })
            })
            .collect::<Result<_, _>>()?,
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for (line, v) in entries {
        let p = problem_from_value(&v, base).map_err(|reason| ProblemError::Line { line, reason })?;
        if !seen.insert(p.id.clone()) {
            return Err(ProblemError::DuplicateProblemId(p.id));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load_problems(path: &Path) -> Result<Vec<Problem>, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problems(&text, path.parent())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// The reasoner had nothing more to offer.
    Exhausted,
    /// The reasoner's reply broke the step schema.
    Protocol,
    Timeout,
    Transport,
    /// A well-formed action could not be applied to the current form.
    Execution,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::Exhausted => "exhausted",
            FailureKind::Protocol => "protocol",
            FailureKind::Timeout => "timeout",
            FailureKind::Transport => "transport",
            FailureKind::Execution => "execution",
        }
    }
}

/// Why an episode stopped early. `step` is the 0-based index of the step
/// that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub step: usize,
    pub kind: FailureKind,
    pub message: String,
    /// The offending reply or action, when there was one.
    pub raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub problem_id: String,
    /// `frames[k + 1]` is `frames[k]` after `steps[k]`.
    pub frames: Vec<LogicForm>,
    pub steps: Vec<StepOutput>,
    pub terminal_answer: Option<AnswerValue>,
    /// The step limit was reached without an answer.
    pub truncated: bool,
    pub failure: Option<Failure>,
}

impl Trajectory {
    pub fn to_value(&self) -> Value {
        let answer = self.terminal_answer.as_ref().map(|a| {
            let (value, unit) = a.to_json();
            json!({"value": value, "unit": unit})
        });
        let failure = self.failure.as_ref().map(|f| {
            json!({"step": f.step, "kind": f.kind.as_str(), "message": f.message, "raw": f.raw})
        });
        json!({
            "problem_id": self.problem_id,
            "frames": self.frames.iter().map(LogicForm::to_value).collect::<Vec<_>>(),
            "steps": self.steps.iter().map(StepOutput::to_value).collect::<Vec<_>>(),
            "terminal_answer": answer,
            "truncated": self.truncated,
            "failure": failure,
        })
    }

    /// Replay the steps from the first frame and compare every frame's
    /// canonical serialization. Returns the first mismatching frame index.
    pub fn check_frames(&self) -> Result<(), usize> {
        if self.frames.len() != self.steps.len() + 1 {
            return Err(self.frames.len().min(self.steps.len() + 1));
        }
        let mut cur = self.frames[0].clone();
        for (k, step) in self.steps.iter().enumerate() {
            cur = execute(&cur, &step.action).map_err(|_| k + 1)?.next_form;
            if cur.to_canonical_string() != self.frames[k + 1].to_canonical_string() {
                return Err(k + 1);
            }
        }
        Ok(())
    }
}

pub fn run_episode(p: &Problem, r: &mut dyn Reasoner, max_steps: usize) -> Trajectory {
    run_episode_with(p, r, max_steps, &mut |_, _| {})
}

/// Like [`run_episode`], calling `on_frame(k, frame)` for every frame as it
/// is produced (frame 0 first).
pub fn run_episode_with(
    p: &Problem,
    r: &mut dyn Reasoner,
    max_steps: usize,
    on_frame: &mut dyn FnMut(usize, &LogicForm),
) -> Trajectory {
    let max_steps = max_steps.max(1);
    let mut t = Trajectory {
        problem_id: p.id.clone(),
        frames: vec![p.initial_form.clone()],
        steps: Vec::new(),
        terminal_answer: None,
        truncated: false,
        failure: None,
    };
    on_frame(0, &t.frames[0]);

    while t.steps.len() < max_steps {
        let k = t.steps.len();
        let input = ReasonerInput::new(&p.text, t.frames[k].clone(), t.steps.clone());
        let step = match r.next_step(&input) {
            Ok(s) => s,
            Err(e) => {
                let (kind, raw) = match &e {
                    ReasonerError::Exhausted(_) => (FailureKind::Exhausted, None),
                    ReasonerError::Protocol { raw, .. } => (FailureKind::Protocol, Some(raw.clone())),
                    ReasonerError::Timeout(_) => (FailureKind::Timeout, None),
                    ReasonerError::Transport(_) => (FailureKind::Transport, None),
                };
                t.failure = Some(Failure { step: k, kind, message: e.to_string(), raw });
                return t;
            }
        };
        let result = match execute(&t.frames[k], &step.action) {
            Ok(res) => res,
            Err(e) => {
                t.failure = Some(Failure {
                    step: k,
                    kind: FailureKind::Execution,
                    message: e.to_string(),
                    raw: Some(step.to_canonical_string()),
                });
                return t;
            }
        };
        t.steps.push(step);
        t.frames.push(result.next_form);
        on_frame(k + 1, &t.frames[k + 1]);
        if result.terminal {
            t.terminal_answer = result.answer;
            return t;
        }
    }
    t.truncated = true;
    t
}

/// 1 when every step the reasoner produced was well formed and applicable.
/// Running out of ideas or steps is not a format failure.
pub fn r_format(t: &Trajectory) -> u8 {
    match &t.failure {
        None => 1,
        Some(f) if f.kind == FailureKind::Exhausted => 1,
        Some(_) => 0,
    }
}

/// Relative tolerance for Numerical answers.
pub const NUMERIC_RTOL: f64 = 1e-6;
/// Absolute tolerance near zero.
pub const NUMERIC_ATOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Unit {
    /// Angle, as a factor to degrees.
    Angle(f64),
    /// Length or unitless.
    Plain,
    Other,
}

fn unit_of(u: Option<&str>) -> (Unit, String) {
    let Some(u) = u else {
        return (Unit::Plain, String::new());
    };
    let norm = u.trim().to_ascii_lowercase();
    let unit = match norm.as_str() {
        "" | "unit" | "units" => Unit::Plain,
        "°" | "deg" | "degree" | "degrees" => Unit::Angle(1.0),
        "rad" | "radian" | "radians" => Unit::Angle(180.0 / std::f64::consts::PI),
        _ => Unit::Other,
    };
    (unit, norm)
}

fn numbers_match(a: f64, ua: Option<&str>, g: f64, ug: Option<&str>) -> bool {
    let ((ka, na), (kg, ng)) = (unit_of(ua), unit_of(ug));
    let (a, g) = match (ka, kg) {
        (Unit::Angle(fa), Unit::Angle(fg)) => (a * fa, g * fg),
        // a bare number is read in the gold answer's unit
        (Unit::Plain, _) | (_, Unit::Plain) => (a, g),
        (Unit::Other, Unit::Other) if na == ng => (a, g),
        _ => return false,
    };
    if !(a.is_finite() && g.is_finite()) {
        return false;
    }
    let diff = (a - g).abs();
    diff <= NUMERIC_ATOL || diff <= NUMERIC_RTOL * g.abs()
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// 1 when `answer` matches the problem's gold answer.
pub fn r_result(answer: Option<&AnswerValue>, p: &Problem) -> u8 {
    let Some(answer) = answer else {
        return 0;
    };
    let hit = match (answer, &p.gold_answer) {
        (
            AnswerValue::Numerical { value: a, unit: ua },
            AnswerValue::Numerical { value: g, unit: ug },
        ) => numbers_match(*a, ua.as_deref(), *g, ug.as_deref()),
        (AnswerValue::Ratio { .. }, AnswerValue::Ratio { .. }) => answer == &p.gold_answer,
        (AnswerValue::Descriptor(a), AnswerValue::Descriptor(g)) => {
            let a = normalize_text(a);
            a == normalize_text(g) || p.aliases.iter().any(|x| normalize_text(x) == a)
        }
        _ => false,
    };
    u8::from(hit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardBreakdown {
    pub r_format: u8,
    pub r_result: u8,
}

pub fn rewards(t: &Trajectory, p: &Problem) -> RewardBreakdown {
    RewardBreakdown {
        r_format: r_format(t),
        r_result: r_result(t.terminal_answer.as_ref(), p),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemScore {
    pub id: String,
    pub answer_type: AnswerType,
    pub rewards: RewardBreakdown,
    pub steps: usize,
    pub failure: Option<FailureKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TypeTally {
    pub count: usize,
    pub solved: usize,
}

impl TypeTally {
    /// Percentage solved; `None` when there are no problems of the type.
    pub fn accuracy(&self) -> Option<f64> {
        (self.count > 0).then(|| 100.0 * self.solved as f64 / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// In problem-file order.
    pub problems: Vec<ProblemScore>,
    pub per_type: BTreeMap<AnswerType, TypeTally>,
    pub total: TypeTally,
}

impl BenchReport {
    pub fn from_scores(problems: Vec<ProblemScore>) -> Self {
        let mut per_type: BTreeMap<AnswerType, TypeTally> =
            AnswerType::ALL.iter().map(|t| (*t, TypeTally::default())).collect();
        let mut total = TypeTally::default();
        for s in &problems {
            let solved = usize::from(s.rewards.r_result);
            let e = per_type.get_mut(&s.answer_type).expect("all types present");
            e.count += 1;
            e.solved += solved;
            total.count += 1;
            total.solved += solved;
        }
        Self { problems, per_type, total }
    }

    pub fn format_rate(&self) -> f64 {
        let ok: usize = self.problems.iter().map(|s| usize::from(s.rewards.r_format)).sum();
        100.0 * ok as f64 / self.problems.len().max(1) as f64
    }

    pub fn to_value(&self) -> Value {
        let acc = |t: &TypeTally| json!({"count": t.count, "solved": t.solved, "accuracy": t.accuracy()});
        json!({
            "problems": self.problems.iter().map(|s| json!({
                "id": s.id,
                "answer_type": s.answer_type.as_str(),
                "r_format": s.rewards.r_format,
                "r_result": s.rewards.r_result,
                "steps": s.steps,
                "failure": s.failure.map(FailureKind::as_str),
            })).collect::<Vec<_>>(),
            "per_type": self.per_type.iter().map(|(k, v)| (k.as_str().to_string(), acc(v))).collect::<Map<_, _>>(),
            "total": acc(&self.total),
        })
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |t: &TypeTally| match t.accuracy() {
            Some(a) => format!("{a:.2}"),
            None => "-".into(),
        };
        writeln!(f, "{:<12}{:>12}{:>12}{:>12}{:>12}", "", "Numerical", "Ratio", "Descriptor", "Total")?;
        let tallies: Vec<&TypeTally> = AnswerType::ALL
            .iter()
            .map(|t| &self.per_type[t])
            .chain([&self.total])
            .collect();
        write!(f, "{:<12}", "problems")?;
        for t in &tallies {
            write!(f, "{:>12}", t.count)?;
        }
        writeln!(f)?;
        write!(f, "{:<12}", "accuracy %")?;
        for t in &tallies {
            write!(f, "{:>12}", cell(t))?;
        }
        writeln!(f)?;
        write!(f, "{:<12}{:>12.2}", "format %", self.format_rate())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("benchmark needs at least one problem")]
pub struct EmptyBenchmark;

/// Run every problem with a fresh reasoner from `make`. Episodes run in
/// parallel; the report keeps the input order.
pub fn score_benchmark<F, R>(problems: &[Problem], make: F, max_steps: usize) -> Result<BenchReport, EmptyBenchmark>
where
    F: Fn(&Problem) -> R + Sync,
    R: Reasoner,
{
    if problems.is_empty() {
        return Err(EmptyBenchmark);
    }
    let scores = problems
        .par_iter()
        .map(|p| {
            let mut r = make(p);
            let t = run_episode(p, &mut r, max_steps);
            ProblemScore {
                id: p.id.clone(),
                answer_type: p.answer_type,
                rewards: rewards(&t, p),
                steps: t.steps.len(),
                failure: t.failure.as_ref().map(|f| f.kind),
            }
        })
        .collect();
    Ok(BenchReport::from_scores(scores))
}

/// Problem counts by answer type; every type is present.
pub fn stats(problems: &[Problem]) -> BTreeMap<AnswerType, usize> {
    let mut out: BTreeMap<AnswerType, usize> = AnswerType::ALL.iter().map(|t| (*t, 0)).collect();
    for p in problems {
        *out.get_mut(&p.answer_type).expect("all types present") += 1;
    }
    out
}

pub fn stats_file(path: &Path) -> Result<BTreeMap<AnswerType, usize>, ProblemError> {
    load_problems(path).map(|ps| stats(&ps))
}
