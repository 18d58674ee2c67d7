//! Diagram repair loop: solve the declared relations, redraw, compare the
//! redrawn diagram with the previous one, and repeat until nothing moves.
//!
//! The redrawn diagram is read back as its own logic form (rendering is
//! lossless given the form), so comparison is a [`diff_forms`] call.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::logic_form::{diff_forms, DiagramDiff, LogicForm, DEFAULT_DIFF_EPS};
use crate::render::{render_svg, RenderError, RenderStyle};
use crate::solver::{solve, SolveError, SolveReport};

pub const DEFAULT_ROUNDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionRound {
    pub report: SolveReport,
    /// Previous form against this round's output.
    pub diff: DiagramDiff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub form: LogicForm,
    pub svg: String,
    pub rounds: Vec<CorrectionRound>,
    /// The last round left every point within the diff tolerance.
    pub settled: bool,
}

impl Correction {
    pub fn final_error(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.report.final_error)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectionError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

pub fn auto_correct(
    lf: &LogicForm,
    pins: &BTreeSet<String>,
    style: &RenderStyle,
    max_rounds: usize,
) -> Result<Correction, CorrectionError> {
    let mut form = lf.clone();
    let mut rounds = Vec::new();
    let mut settled = false;
    for _ in 0..max_rounds.max(1) {
        let (next, report) = solve(&form, pins)?;
        let diff = diff_forms(&form, &next, DEFAULT_DIFF_EPS);
        settled = diff.is_empty();
        rounds.push(CorrectionRound { report, diff });
        form = next;
        if settled {
            break;
        }
    }
    let svg = render_svg(&form, style)?;
    Ok(Correction {
        form,
        svg,
        rounds,
        settled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_form::{seg, Relation};

    #[test]
    fn repairs_then_settles() {
        let lf = LogicForm::new()
            .with_point("A", 0.0, 0.0)
            .with_point("B", 3.0, 0.0)
            .with_point("C", 3.05, 3.97)
            .with_line("A", "B")
            .with_line("B", "C")
            .with_relation(Relation::FixedLength(seg("B", "C"), 4.0))
            .with_relation(Relation::Perpendicular(seg("A", "B"), seg("B", "C")));
        let pins: BTreeSet<String> = ["A", "B"].map(String::from).into();
        let out = auto_correct(&lf, &pins, &RenderStyle::default(), DEFAULT_ROUNDS).unwrap();
        assert!(out.settled);
        assert!(out.final_error() < 1e-10);
        assert_eq!(out.rounds[0].diff.moved_points.len(), 1);
        assert!(out.rounds.last().unwrap().diff.is_empty());
        let c = out.form.pos("C").unwrap();
        assert!((c.x - 3.0).abs() < 1e-4 && (c.y - 4.0).abs() < 1e-4);
        assert!(out.svg.contains("pt-C"));
    }

    #[test]
    fn consistent_form_settles_at_once() {
        let lf = LogicForm::new()
            .with_point("A", 0.0, 0.0)
            .with_point("B", 3.0, 4.0)
            .with_relation(Relation::FixedLength(seg("A", "B"), 5.0));
        let out = auto_correct(&lf, &BTreeSet::new(), &RenderStyle::default(), 3).unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert!(out.settled);
        assert_eq!(out.form, lf);
    }
}
