//! Goals, written in the form's `goal` annotation.
//!
//! ```text
//! angle_value(A B C)                 -> Numerical, degrees
//! equal_angles(A B C; D E F)         -> "equal"
//! equal_segments(A B; C D)           -> "equal"
//! segment_ratio(A M; A B)            -> Ratio
//! perpendicular(A B; C D)            -> "perpendicular"
//! parallel(A B; C D)                 -> "parallel"
//! congruent_triangles(A B C; D E F)  -> "congruent"
//! ```
//!
//! Labels are separated by whitespace, argument groups by `;`.

use std::fmt;

use thiserror::Error;

use crate::answer::AnswerValue;
use crate::canonical::round_sig;
use crate::logic_form::is_valid_label;

use super::diagram::{Diagram, Pt};
use super::facts::{Angle, FactSet, Seg, Statement};
use super::rules::{ang_eq, seg_eq};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    AngleValue([String; 3]),
    EqualAngles([String; 3], [String; 3]),
    EqualSegments([String; 2], [String; 2]),
    SegmentRatio([String; 2], [String; 2]),
    Perpendicular([String; 2], [String; 2]),
    Parallel([String; 2], [String; 2]),
    CongruentTriangles([String; 3], [String; 3]),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad goal `{text}`: {reason}")]
pub struct GoalError {
    pub text: String,
    pub reason: String,
}

fn group<const N: usize>(g: &[String]) -> Option<[String; N]> {
    g.to_vec().try_into().ok()
}

pub fn parse_goal(text: &str) -> Result<Goal, GoalError> {
    let err = |reason: &str| GoalError {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let t = text.trim();
    let (name, rest) = t.split_once('(').ok_or_else(|| err("expected `name(args)`"))?;
    let body = rest.strip_suffix(')').ok_or_else(|| err("missing `)`"))?;
    let groups: Vec<Vec<String>> = body
        .split(';')
        .map(|g| g.split_whitespace().map(str::to_string).collect())
        .collect();
    if let Some(bad) = groups.iter().flatten().find(|l| !is_valid_label(l)) {
        return Err(err(&format!("invalid label `{bad}`")));
    }
    let shape: Vec<usize> = groups.iter().map(Vec::len).collect();
    let arity = || err(&format!("wrong argument shape {shape:?}"));
    let one3 = || group::<3>(&groups[0]).ok_or_else(arity);
    let two = |n: usize| -> Result<(Vec<String>, Vec<String>), GoalError> {
        if groups.len() != 2 || groups[0].len() != n || groups[1].len() != n {
            return Err(arity());
        }
        Ok((groups[0].clone(), groups[1].clone()))
    };
    let segs = || -> Result<([String; 2], [String; 2]), GoalError> {
        let (a, b) = two(2)?;
        Ok((group(&a).unwrap(), group(&b).unwrap()))
    };
    let tris = || -> Result<([String; 3], [String; 3]), GoalError> {
        let (a, b) = two(3)?;
        Ok((group(&a).unwrap(), group(&b).unwrap()))
    };
    match name.trim() {
        "angle_value" if groups.len() == 1 => Ok(Goal::AngleValue(one3()?)),
        "angle_value" => Err(arity()),
        "equal_angles" => tris().map(|(a, b)| Goal::EqualAngles(a, b)),
        "equal_segments" => segs().map(|(a, b)| Goal::EqualSegments(a, b)),
        "segment_ratio" => segs().map(|(a, b)| Goal::SegmentRatio(a, b)),
        "perpendicular" => segs().map(|(a, b)| Goal::Perpendicular(a, b)),
        "parallel" => segs().map(|(a, b)| Goal::Parallel(a, b)),
        "congruent_triangles" => tris().map(|(a, b)| Goal::CongruentTriangles(a, b)),
        other => Err(err(&format!("unknown goal `{other}`"))),
    }
}

impl Goal {
    pub fn labels(&self) -> Vec<&str> {
        match self {
            Goal::AngleValue(a) => a.iter().map(String::as_str).collect(),
            Goal::EqualAngles(a, b) | Goal::CongruentTriangles(a, b) => {
                a.iter().chain(b).map(String::as_str).collect()
            }
            Goal::EqualSegments(a, b)
            | Goal::SegmentRatio(a, b)
            | Goal::Perpendicular(a, b)
            | Goal::Parallel(a, b) => a.iter().chain(b).map(String::as_str).collect(),
        }
    }

    /// The answer the goal asks for, with the supporting fact indices, when
    /// `facts` already settle it.
    pub fn answer(&self, d: &Diagram, facts: &FactSet) -> Option<(AnswerValue, Vec<usize>)> {
        let pts: Option<Vec<Pt>> = self.labels().iter().map(|l| d.idx(l)).collect();
        let p = pts?;
        let angle = |o: usize| Angle::new(d, p[o], p[o + 1], p[o + 2]);
        let seg = |o: usize| (p[o] != p[o + 1]).then(|| Seg::new(p[o], p[o + 1]));
        let word = |w: &str| AnswerValue::Descriptor(w.to_string());
        match self {
            Goal::AngleValue(_) => {
                let (v, i) = facts.angle_value(&angle(0)?)?;
                Some((AnswerValue::degrees(round_sig(v)), vec![i]))
            }
            Goal::EqualAngles(..) => Some((word("equal"), ang_eq(facts, angle(0)?, angle(3)?)?)),
            Goal::EqualSegments(..) => Some((word("equal"), seg_eq(facts, seg(0)?, seg(2)?)?)),
            Goal::SegmentRatio(..) => ratio(facts, seg(0)?, seg(2)?),
            Goal::Perpendicular(..) => {
                let i = line_pair(d, facts, seg(0)?, seg(2)?, |s| match s {
                    Statement::Perpendicular(x, y) => Some((*x, *y)),
                    _ => None,
                })?;
                Some((word("perpendicular"), vec![i]))
            }
            Goal::Parallel(..) => {
                let i = line_pair(d, facts, seg(0)?, seg(2)?, |s| match s {
                    Statement::Parallel(x, y) => Some((*x, *y)),
                    _ => None,
                })?;
                Some((word("parallel"), vec![i]))
            }
            Goal::CongruentTriangles(..) => {
                let st = Statement::congruent([p[0], p[1], p[2]], [p[3], p[4], p[5]])?;
                Some((word("congruent"), vec![facts.find(&st)?]))
            }
        }
    }
}

/// A fact relating the lines carrying `a` and `b`, in either order.
fn line_pair(d: &Diagram, facts: &FactSet, a: Seg, b: Seg, pick: impl Fn(&Statement) -> Option<(Seg, Seg)>) -> Option<usize> {
    let on = |s: Seg, line: Seg| d.collinear(line.0, line.1, s.0) && d.collinear(line.0, line.1, s.1);
    facts.facts().iter().position(|f| {
        pick(&f.statement).is_some_and(|(x, y)| (on(x, a) && on(y, b)) || (on(x, b) && on(y, a)))
    })
}

/// Ratios settled by equal segments (1:1) or a midpoint (1:2, 2:1).
fn ratio(facts: &FactSet, a: Seg, b: Seg) -> Option<(AnswerValue, Vec<usize>)> {
    if let Some(p) = seg_eq(facts, a, b) {
        return Some((AnswerValue::ratio(1, 1).ok()?, p));
    }
    for (i, f) in facts.facts().iter().enumerate() {
        let Statement::Midpoint(m, whole) = f.statement else {
            continue;
        };
        let halves = [Seg::new(whole.0, m), Seg::new(m, whole.1)];
        let half_of = |s: Seg| halves.iter().find_map(|&h| seg_eq(facts, s, h));
        if b == whole {
            if let Some(mut p) = half_of(a) {
                p.push(i);
                return Some((AnswerValue::ratio(1, 2).ok()?, p));
            }
        }
        if a == whole {
            if let Some(mut p) = half_of(b) {
                p.push(i);
                return Some((AnswerValue::ratio(2, 1).ok()?, p));
            }
        }
    }
    None
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[String]| v.join(" ");
        match self {
            Goal::AngleValue(a) => write!(f, "angle_value({})", j(a)),
            Goal::EqualAngles(a, b) => write!(f, "equal_angles({}; {})", j(a), j(b)),
            Goal::EqualSegments(a, b) => write!(f, "equal_segments({}; {})", j(a), j(b)),
            Goal::SegmentRatio(a, b) => write!(f, "segment_ratio({}; {})", j(a), j(b)),
            Goal::Perpendicular(a, b) => write!(f, "perpendicular({}; {})", j(a), j(b)),
            Goal::Parallel(a, b) => write!(f, "parallel({}; {})", j(a), j(b)),
            Goal::CongruentTriangles(a, b) => write!(f, "congruent_triangles({}; {})", j(a), j(b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        for text in [
            "angle_value(A B C)",
            "equal_angles(A B C; A C B)",
            "equal_segments(A C; A C')",
            "segment_ratio(A M; A B)",
            "perpendicular(A M; B C)",
            "parallel(A B; C D)",
            "congruent_triangles(A B C; D E F)",
        ] {
            let g = parse_goal(text).unwrap();
            assert_eq!(g.to_string(), text);
        }
    }

    #[test]
    fn rejects_bad_goals() {
        assert!(parse_goal("angle_value(A B)").is_err());
        assert!(parse_goal("equal_segments(A B C; D E)").is_err());
        assert!(parse_goal("area(A B C)").is_err());
        assert!(parse_goal("angle_value A B C").is_err());
        assert!(parse_goal("angle_value(A B 1)").is_err());
    }
}
