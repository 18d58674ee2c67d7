//! The rule-based reasoner: answer when the closure settles the goal,
//! otherwise pick an auxiliary construction by simulating candidates.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::action::{execute, Action};
use crate::canonical;
use crate::logic_form::{is_valid_label, LogicForm, Shape};

use super::diagram::{Diagram, Pt};
use super::facts::{DisplayFact, FactSet, Provenance};
use super::goal::{parse_goal, Goal};
use super::rules::{derive_with, RuleSet};
use super::{Reasoner, ReasonerError, ReasonerInput, StepOutput};

const ROTATION_DEGREES: [f64; 3] = [60.0, 90.0, 180.0];
const MIDPOINT_NAMES: [&str; 12] = ["M", "N", "P", "Q", "K", "L", "R", "S", "T", "U", "V", "W"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Join two labeled points.
    Join,
    /// Label a midpoint, then join it to the opposite vertex.
    Median,
    /// Reflect or rotate a triangle.
    Transform,
}

/// A construction and what simulating it revealed.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub actions: Vec<Action>,
    pub family: Family,
    /// Facts in the simulated closure that were not known before.
    pub new_facts: usize,
    /// Number of constructions (this one included) after which the goal
    /// follows, when at most two.
    pub goal_depth: Option<u8>,
    key: String,
}

impl Candidate {
    /// Serialized actions; the tie-break for equal fact counts.
    pub fn key(&self) -> &str {
        &self.key
    }
}

fn fact_keys(d: &Diagram, facts: &FactSet) -> HashSet<String> {
    facts
        .facts()
        .iter()
        .map(|f| {
            let value = f.value.map(canonical::fmt_real).unwrap_or_default();
            format!("{}({}){value}", f.statement.kind(), f.statement.args(d).join(","))
        })
        .collect()
}

fn fresh_name(lf: &LogicForm, goal: &Goal) -> String {
    let mut wanted: Vec<&str> = goal
        .labels()
        .into_iter()
        .filter(|l| !l.ends_with('\'') && !lf.has_point(l))
        .collect();
    wanted.sort_unstable();
    if let Some(l) = wanted.first() {
        return l.to_string();
    }
    if let Some(l) = MIDPOINT_NAMES.iter().find(|l| !lf.has_point(l)) {
        return l.to_string();
    }
    (1..)
        .map(|i| format!("X{i}"))
        .find(|l| !lf.has_point(l) && is_valid_label(l))
        .unwrap()
}

/// Every construction of the three families applicable to `lf`.
fn generate(lf: &LogicForm, d: &Diagram, goal: &Goal) -> Vec<(Vec<Action>, Family)> {
    let n = d.len() as Pt;
    let mut out = Vec::new();
    let name = |p: Pt| d.name(p).to_string();

    for a in 0..n {
        for b in a + 1..n {
            if !d.joined(a, b) && !d.coincide(a, b) {
                out.push((vec![Action::DrawLine { from: name(a), to: name(b) }], Family::Join));
            }
        }
    }

    let mut edges: Vec<(Pt, Pt)> = Vec::new();
    for o in &lf.objects {
        for (a, b) in o.segments() {
            if let (Some(a), Some(b)) = (d.idx(a), d.idx(b)) {
                let e = (a.min(b), a.max(b));
                if e.0 != e.1 && !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
    }
    edges.sort_unstable();

    let label = fresh_name(lf, goal);
    for &(a, b) in &edges {
        let mid = d.at(a).midpoint(d.at(b));
        if d.pos.iter().any(|p| p.distance(mid) <= d.tol()) {
            continue;
        }
        let mark = Action::LabelPoint {
            name: label.clone(),
            coordinates: mid,
        };
        let apexes: Vec<Pt> = (0..n)
            .filter(|&v| d.joined(v, a) && d.joined(v, b) && !d.collinear(a, b, v))
            .collect();
        if apexes.is_empty() {
            out.push((vec![mark.clone()], Family::Median));
        }
        for v in apexes {
            let join = Action::DrawLine {
                from: name(v),
                to: label.clone(),
            };
            out.push((vec![mark.clone(), join], Family::Median));
        }
    }

    for o in &lf.objects {
        let Shape::Polygon(vertices) = &o.shape else {
            continue;
        };
        if vertices.len() != 3 {
            continue;
        }
        let object = o.reference();
        for &(a, b) in &edges {
            out.push((
                vec![Action::Reflect {
                    object: object.clone(),
                    axis: [name(a), name(b)],
                }],
                Family::Transform,
            ));
        }
        for center in vertices {
            for degrees in ROTATION_DEGREES {
                out.push((
                    vec![Action::Rotate {
                        object: object.clone(),
                        center: center.clone(),
                        degrees,
                    }],
                    Family::Transform,
                ));
            }
        }
    }
    out
}

fn simulate(lf: &LogicForm, actions: &[Action]) -> Option<LogicForm> {
    let mut cur = lf.clone();
    for a in actions {
        cur = execute(&cur, a).ok()?.next_form;
    }
    (cur != *lf).then_some(cur)
}

struct Outcome {
    form: LogicForm,
    diagram: Diagram,
    facts: FactSet,
    reaches: bool,
}

fn outcome(lf: &LogicForm, actions: &[Action], goal: &Goal, rules: RuleSet) -> Option<Outcome> {
    let form = simulate(lf, actions)?;
    let diagram = Diagram::new(&form);
    let facts = derive_with(&form, &diagram, &FactSet::new(), rules);
    let reaches = goal.answer(&diagram, &facts).is_some();
    Some(Outcome {
        form,
        diagram,
        facts,
        reaches,
    })
}

fn action_key(actions: &[Action]) -> String {
    actions
        .iter()
        .map(Action::to_canonical_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Ranked constructions. Those that settle the goal come first (one step,
/// then two), fewest new facts first; the rest follow with most new facts
/// first. Ties go by serialized action. Empty when `facts` already settle
/// the goal.
pub fn propose_construction(lf: &LogicForm, goal: &Goal, facts: &FactSet, rules: RuleSet) -> Vec<Candidate> {
    propose(lf, goal, facts, rules, 6)
}

fn propose(lf: &LogicForm, goal: &Goal, facts: &FactSet, rules: RuleSet, beam: usize) -> Vec<Candidate> {
    let d = Diagram::new(lf);
    if goal.answer(&d, facts).is_some() {
        return Vec::new();
    }
    let known = fact_keys(&d, facts);
    let mut scored: Vec<(Candidate, Outcome)> = generate(lf, &d, goal)
        .into_par_iter()
        .filter_map(|(actions, family)| {
            let out = outcome(lf, &actions, goal, rules)?;
            let new_facts = fact_keys(&out.diagram, &out.facts).difference(&known).count();
            let key = action_key(&actions);
            Some((
                Candidate {
                    goal_depth: out.reaches.then_some(1),
                    actions,
                    family,
                    new_facts,
                    key,
                },
                out,
            ))
        })
        .collect();
    scored.sort_by(|(a, _), (b, _)| b.new_facts.cmp(&a.new_facts).then_with(|| a.key.cmp(&b.key)));

    if beam > 0 && scored.iter().all(|(c, _)| c.goal_depth.is_none()) {
        let depth2: Vec<bool> = scored
            .par_iter()
            .take(beam)
            .map(|(_, out)| {
                generate(&out.form, &out.diagram, goal)
                    .into_par_iter()
                    .any(|(actions, _)| outcome(&out.form, &actions, goal, rules).is_some_and(|o| o.reaches))
            })
            .collect();
        for ((c, _), hit) in scored.iter_mut().zip(depth2) {
            if hit {
                c.goal_depth = Some(2);
            }
        }
    }
    let mut ranked: Vec<Candidate> = scored.into_iter().map(|(c, _)| c).collect();
    ranked.sort_by(|a, b| {
        let depth = |c: &Candidate| c.goal_depth.unwrap_or(u8::MAX);
        let facts = match a.goal_depth {
            Some(_) => a.new_facts.cmp(&b.new_facts),
            None => b.new_facts.cmp(&a.new_facts),
        };
        depth(a).cmp(&depth(b)).then(facts).then_with(|| a.key.cmp(&b.key))
    });
    ranked
}

/// Forward-chaining prover with construction search.
#[derive(Debug, Clone, Copy)]
pub struct RuleReasoner {
    pub rules: RuleSet,
    /// Candidates explored for a second construction.
    pub beam: usize,
}

impl Default for RuleReasoner {
    fn default() -> Self {
        Self {
            rules: RuleSet::all(),
            beam: 6,
        }
    }
}

impl RuleReasoner {
    pub fn with_rules(rules: RuleSet) -> Self {
        Self {
            rules,
            ..Self::default()
        }
    }
}

fn explain(d: &Diagram, facts: &FactSet, premises: &[usize]) -> String {
    let mut support: Vec<usize> = premises.iter().flat_map(|&i| facts.support(i)).collect();
    support.sort_unstable();
    support.dedup();
    let lines: Vec<String> = support
        .iter()
        .map(|&i| {
            let f = facts.get(i);
            let why = match &f.provenance {
                Provenance::Seed => "given".to_string(),
                Provenance::Relation(_) => "given".to_string(),
                Provenance::Construction(c) => c.clone(),
                Provenance::Rule { rule, .. } => rule.replace('_', " "),
            };
            format!("{} ({why})", DisplayFact { fact: f, diagram: d })
        })
        .collect();
    lines.join("; ")
}

fn describe(c: &Candidate) -> String {
    let steps: Vec<String> = c.actions.iter().map(ToString::to_string).collect();
    let plan = steps.join(", then ");
    match c.goal_depth {
        Some(1) => format!("Construct: {plan}. This settles the goal ({} new facts).", c.new_facts),
        Some(_) => format!(
            "Construct: {plan}. One more construction then settles the goal ({} new facts).",
            c.new_facts
        ),
        None => format!("Construct: {plan}. It exposes the most new facts ({}).", c.new_facts),
    }
}

impl Reasoner for RuleReasoner {
    fn next_step(&mut self, input: &ReasonerInput) -> Result<StepOutput, ReasonerError> {
        let lf = &input.current_form;
        let text = lf
            .goal()
            .ok_or_else(|| ReasonerError::Exhausted("the form has no goal annotation".into()))?;
        let goal = parse_goal(text).map_err(|e| ReasonerError::Exhausted(e.to_string()))?;
        let d = Diagram::new(lf);
        let facts = derive_with(lf, &d, &FactSet::new(), self.rules);
        if let Some((answer, premises)) = goal.answer(&d, &facts) {
            let reasoning = format!("{}. Hence {goal} gives {answer}.", explain(&d, &facts, &premises));
            return Ok(StepOutput::new(reasoning, Action::Answer(answer)));
        }
        let ranked = propose(lf, &goal, &facts, self.rules, self.beam);
        let pick = ranked
            .iter()
            .find(|c| c.goal_depth == Some(1))
            .or_else(|| ranked.iter().find(|c| c.goal_depth == Some(2)))
            .ok_or_else(|| ReasonerError::Exhausted(format!("no construction helps with {goal}")))?;
        Ok(StepOutput::new(describe(pick), pick.actions[0].clone()))
    }
}
