//! Residuals for declared relations and coordinate repair by L-BFGS.
//!
//! Every relation contributes residuals that vanish exactly when it holds;
//! the error is the sum of their squares. `solve` moves unpinned points from
//! their current coordinates until the error vanishes or progress stops.

use std::collections::BTreeSet;

use serde_json::{json, Value};
use thiserror::Error;

use crate::canonical;
use crate::geom::{Vec2, DEGENERATE_EPS};
use crate::lbfgs::{self, LbfgsConfig, Termination};
use crate::logic_form::{LogicForm, Relation};

/// Error below which a form counts as repaired.
pub const SOLVE_EPS: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-9;
pub const MAX_ITER: usize = 500;
pub const MEMORY: usize = 10;
pub const WOLFE_C1: f64 = 1e-4;
pub const WOLFE_C2: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("degenerate relation {0}")]
    DegenerateRelation(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("every point is pinned but the error is {0}")]
    NoFreeParameters(f64),
    #[error("error is not finite")]
    NonFiniteError,
    #[error("parameter vector does not match the form")]
    ParamMismatch,
}

/// Coordinates of the unpinned points, flattened as `[x0, y0, x1, y1, ...]`
/// in the form's point order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn from_form(lf: &LogicForm, pins: &BTreeSet<String>) -> Self {
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for p in lf.points.iter().filter(|p| !pins.contains(&p.name)) {
            labels.push(p.name.clone());
            values.extend([p.x, p.y]);
        }
        Self { labels, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy of `lf` with the free coordinates replaced.
    pub fn apply_to(&self, lf: &LogicForm) -> Result<LogicForm, SolveError> {
        let mut out = lf.clone();
        for (i, label) in self.labels.iter().enumerate() {
            let p = out
                .point_mut(label)
                .ok_or_else(|| SolveError::UnknownLabel(label.clone()))?;
            p.x = self.values[2 * i];
            p.y = self.values[2 * i + 1];
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub initial_error: f64,
    pub final_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_point_displacement: f64,
}

impl SolveReport {
    pub fn to_value(&self) -> Value {
        json!({
            "initial_error": self.initial_error,
            "final_error": self.final_error,
            "iterations": self.iterations,
            "converged": self.converged,
            "max_point_displacement": canonical::real_value(self.max_point_displacement),
        })
    }
}

/// A relation with labels resolved to point indices.
#[derive(Debug, Clone, Copy)]
enum Compiled {
    PointOnLine { p: usize, a: usize, b: usize },
    PointOnCircle { p: usize, o: usize, r: f64 },
    Perpendicular { a: usize, b: usize, c: usize, d: usize },
    Parallel { a: usize, b: usize, c: usize, d: usize },
    EqualLength { a: usize, b: usize, c: usize, d: usize },
    FixedLength { a: usize, b: usize, v: f64 },
    FixedAngle { a: usize, v: usize, b: usize, deg: f64 },
    Collinear { a: usize, b: usize, c: usize },
    Midpoint { m: usize, p: usize, q: usize },
}

/// One residual and its nonzero partials with respect to point positions.
struct Term {
    value: f64,
    grad: Vec<(usize, Vec2)>,
}

struct System<'a> {
    relations: Vec<(Compiled, &'a Relation)>,
}

impl<'a> System<'a> {
    fn compile(lf: &'a LogicForm) -> Result<Self, SolveError> {
        let idx = |name: &str| {
            lf.points
                .binary_search_by(|p| p.name.as_str().cmp(name))
                .map_err(|_| SolveError::UnknownLabel(name.to_string()))
        };
        let mut relations = Vec::with_capacity(lf.relations.len());
        for rel in &lf.relations {
            let c = match rel {
                Relation::PointOnLine { point, line } => Compiled::PointOnLine {
                    p: idx(point)?,
                    a: idx(&line[0])?,
                    b: idx(&line[1])?,
                },
                Relation::PointOnCircle { point, center } => Compiled::PointOnCircle {
                    p: idx(point)?,
                    o: idx(center)?,
                    r: lf
                        .circle_radius(center)
                        .ok_or_else(|| SolveError::UnknownLabel(format!("circle {center}")))?,
                },
                Relation::Perpendicular(s, t) => Compiled::Perpendicular {
                    a: idx(&s[0])?,
                    b: idx(&s[1])?,
                    c: idx(&t[0])?,
                    d: idx(&t[1])?,
                },
                Relation::Parallel(s, t) => Compiled::Parallel {
                    a: idx(&s[0])?,
                    b: idx(&s[1])?,
                    c: idx(&t[0])?,
                    d: idx(&t[1])?,
                },
                Relation::EqualLength(s, t) => Compiled::EqualLength {
                    a: idx(&s[0])?,
                    b: idx(&s[1])?,
                    c: idx(&t[0])?,
                    d: idx(&t[1])?,
                },
                Relation::FixedLength(s, v) => Compiled::FixedLength {
                    a: idx(&s[0])?,
                    b: idx(&s[1])?,
                    v: *v,
                },
                Relation::FixedAngle(p, deg) => Compiled::FixedAngle {
                    a: idx(&p[0])?,
                    v: idx(&p[1])?,
                    b: idx(&p[2])?,
                    deg: *deg,
                },
                Relation::Collinear(p) => Compiled::Collinear {
                    a: idx(&p[0])?,
                    b: idx(&p[1])?,
                    c: idx(&p[2])?,
                },
                Relation::Midpoint { point, segment } => Compiled::Midpoint {
                    m: idx(point)?,
                    p: idx(&segment[0])?,
                    q: idx(&segment[1])?,
                },
            };
            relations.push((c, rel));
        }
        Ok(Self { relations })
    }

    fn terms(&self, pos: &[Vec2], out: &mut Vec<Term>) -> Result<(), SolveError> {
        out.clear();
        for (c, rel) in &self.relations {
            eval(*c, pos, out).map_err(|()| SolveError::DegenerateRelation(rel.to_string()))?;
        }
        Ok(())
    }
}

/// Unit direction and length of `b - a`, or `Err` when too short.
fn unit(pos: &[Vec2], a: usize, b: usize) -> Result<(Vec2, f64), ()> {
    let d = pos[b] - pos[a];
    let len = d.norm();
    if len < DEGENERATE_EPS {
        return Err(());
    }
    Ok((d * (1.0 / len), len))
}

/// Partial of a function of `u = d/|d|` pulled back to `d`, given `∂f/∂u = w`.
fn through_unit(u: Vec2, len: f64, w: Vec2) -> Vec2 {
    (w - u * u.dot(w)) * (1.0 / len)
}

fn perp(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

fn eval(c: Compiled, pos: &[Vec2], out: &mut Vec<Term>) -> Result<(), ()> {
    match c {
        Compiled::PointOnLine { p, a, b } => {
            let (u, len) = unit(pos, a, b)?;
            let w = pos[p] - pos[a];
            // signed distance cross(u, P - A)
            let value = u.cross(w);
            let dw = Vec2::new(-u.y, u.x);
            let dd = through_unit(u, len, perp(w));
            out.push(Term {
                value,
                grad: vec![(p, dw), (a, -dw - dd), (b, dd)],
            });
        }
        Compiled::PointOnCircle { p, o, r } => {
            let d = pos[p] - pos[o];
            let len = d.norm();
            let g = if len < DEGENERATE_EPS {
                Vec2::ZERO
            } else {
                d * (1.0 / len)
            };
            out.push(Term {
                value: len - r,
                grad: vec![(p, g), (o, -g)],
            });
        }
        Compiled::Perpendicular { a, b, c, d } => {
            let (u1, l1) = unit(pos, a, b)?;
            let (u2, l2) = unit(pos, c, d)?;
            let g1 = through_unit(u1, l1, u2);
            let g2 = through_unit(u2, l2, u1);
            out.push(Term {
                value: u1.dot(u2),
                grad: vec![(a, -g1), (b, g1), (c, -g2), (d, g2)],
            });
        }
        Compiled::Parallel { a, b, c, d } => {
            let (u1, l1) = unit(pos, a, b)?;
            let (u2, l2) = unit(pos, c, d)?;
            let g1 = through_unit(u1, l1, perp(u2));
            let g2 = through_unit(u2, l2, -perp(u1));
            out.push(Term {
                value: u1.cross(u2),
                grad: vec![(a, -g1), (b, g1), (c, -g2), (d, g2)],
            });
        }
        Compiled::EqualLength { a, b, c, d } => {
            let d1 = pos[b] - pos[a];
            let d2 = pos[d] - pos[c];
            out.push(Term {
                value: d1.norm_sq() - d2.norm_sq(),
                grad: vec![(a, d1 * -2.0), (b, d1 * 2.0), (c, d2 * 2.0), (d, d2 * -2.0)],
            });
        }
        Compiled::FixedLength { a, b, v } => {
            let (u, len) = unit(pos, a, b)?;
            out.push(Term {
                value: len - v,
                grad: vec![(a, -u), (b, u)],
            });
        }
        Compiled::FixedAngle { a, v, b, deg } => {
            let p = pos[a] - pos[v];
            let q = pos[b] - pos[v];
            if p.norm() < DEGENERATE_EPS || q.norm() < DEGENERATE_EPS {
                return Err(());
            }
            let cr = p.cross(q);
            let s = cr.abs();
            let dt = p.dot(q);
            let sign = if cr < 0.0 { -1.0 } else { 1.0 };
            let denom = s * s + dt * dt;
            let k = 180.0 / std::f64::consts::PI;
            // θ = atan2(|p×q|, p·q)
            let dp = (Vec2::new(q.y, -q.x) * (dt * sign) - q * s) * (k / denom);
            let dq = (Vec2::new(-p.y, p.x) * (dt * sign) - p * s) * (k / denom);
            out.push(Term {
                value: s.atan2(dt).to_degrees() - deg,
                grad: vec![(a, dp), (b, dq), (v, -dp - dq)],
            });
        }
        Compiled::Collinear { a, b, c } => {
            let p = pos[b] - pos[a];
            let q = pos[c] - pos[a];
            let dp = Vec2::new(q.y, -q.x);
            let dq = Vec2::new(-p.y, p.x);
            out.push(Term {
                value: p.cross(q),
                grad: vec![(b, dp), (c, dq), (a, -dp - dq)],
            });
        }
        Compiled::Midpoint { m, p, q } => {
            let r = pos[m] * 2.0 - pos[p] - pos[q];
            let x = Vec2::new(1.0, 0.0);
            let y = Vec2::new(0.0, 1.0);
            out.push(Term {
                value: r.x,
                grad: vec![(m, x * 2.0), (p, -x), (q, -x)],
            });
            out.push(Term {
                value: r.y,
                grad: vec![(m, y * 2.0), (p, -y), (q, -y)],
            });
        }
    }
    Ok(())
}

fn positions(lf: &LogicForm) -> Vec<Vec2> {
    lf.points.iter().map(|p| p.pos()).collect()
}

/// One residual per relation, in declaration order; `midpoint` contributes
/// its x and y components.
pub fn residuals(lf: &LogicForm) -> Result<Vec<f64>, SolveError> {
    let sys = System::compile(lf)?;
    let mut terms = Vec::new();
    sys.terms(&positions(lf), &mut terms)?;
    Ok(terms.iter().map(|t| t.value).collect())
}

/// Sum of squared residuals.
pub fn total_error(lf: &LogicForm) -> Result<f64, SolveError> {
    Ok(residuals(lf)?.iter().map(|r| r * r).sum())
}

/// `∂E/∂params`, ordered like `params.values`. Coordinates of `lf` points
/// not listed in `params` are held at their values in `lf`.
pub fn error_gradient(lf: &LogicForm, params: &ParamVector) -> Result<Vec<f64>, SolveError> {
    let sys = System::compile(lf)?;
    let slots = param_slots(lf, params)?;
    let mut pos = positions(lf);
    let mut grad = vec![0.0; params.len()];
    let mut terms = Vec::new();
    evaluate(&sys, &slots, &params.values, &mut pos, &mut terms, &mut grad)?;
    Ok(grad)
}

/// For each point, the index of its x coordinate in the parameter vector.
fn param_slots(lf: &LogicForm, params: &ParamVector) -> Result<Vec<Option<usize>>, SolveError> {
    if params.values.len() != 2 * params.labels.len() {
        return Err(SolveError::ParamMismatch);
    }
    let mut slots = vec![None; lf.points.len()];
    for (i, label) in params.labels.iter().enumerate() {
        let k = lf
            .points
            .binary_search_by(|p| p.name.as_str().cmp(label))
            .map_err(|_| SolveError::UnknownLabel(label.clone()))?;
        if slots[k].is_some() {
            return Err(SolveError::ParamMismatch);
        }
        slots[k] = Some(2 * i);
    }
    Ok(slots)
}

/// Error at `x`, writing its gradient into `grad`.
fn evaluate(
    sys: &System,
    slots: &[Option<usize>],
    x: &[f64],
    pos: &mut [Vec2],
    terms: &mut Vec<Term>,
    grad: &mut [f64],
) -> Result<f64, SolveError> {
    for (p, slot) in pos.iter_mut().zip(slots) {
        if let Some(s) = slot {
            *p = Vec2::new(x[*s], x[*s + 1]);
        }
    }
    sys.terms(pos, terms)?;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut e = 0.0;
    for t in terms.iter() {
        e += t.value * t.value;
        for (pt, d) in &t.grad {
            if let Some(s) = slots[*pt] {
                grad[s] += 2.0 * t.value * d.x;
                grad[s + 1] += 2.0 * t.value * d.y;
            }
        }
    }
    if !e.is_finite() {
        return Err(SolveError::NonFiniteError);
    }
    Ok(e)
}

/// Repair the coordinates of unpinned points. Pinned coordinates are copied
/// through untouched.
pub fn solve(lf: &LogicForm, pins: &BTreeSet<String>) -> Result<(LogicForm, SolveReport), SolveError> {
    if let Some(unknown) = pins.iter().find(|p| !lf.has_point(p)) {
        return Err(SolveError::UnknownLabel(unknown.clone()));
    }
    let sys = System::compile(lf)?;
    let params = ParamVector::from_form(lf, pins);
    let slots = param_slots(lf, &params)?;
    let mut pos = positions(lf);
    let mut terms = Vec::new();
    let mut scratch = vec![0.0; params.len()];
    let e0 = evaluate(&sys, &slots, &params.values, &mut pos, &mut terms, &mut scratch)?;

    let unchanged = |iterations| SolveReport {
        initial_error: e0,
        final_error: e0,
        iterations,
        converged: e0 < SOLVE_EPS,
        max_point_displacement: 0.0,
    };
    if e0 < SOLVE_EPS {
        return Ok((lf.clone(), unchanged(0)));
    }
    if params.is_empty() {
        return Err(SolveError::NoFreeParameters(e0));
    }

    let cfg = LbfgsConfig {
        memory: MEMORY,
        c1: WOLFE_C1,
        c2: WOLFE_C2,
        max_iter: MAX_ITER,
        f_tol: SOLVE_EPS,
        g_tol: GRADIENT_TOL,
        ..LbfgsConfig::default()
    };
    let objective = |x: &[f64], g: &mut [f64]| evaluate(&sys, &slots, x, &mut pos, &mut terms, g);
    let outcome = match lbfgs::minimize(objective, params.values.clone(), &cfg) {
        Ok(o) => o,
        Err(Some(e)) => return Err(e),
        Err(None) => return Err(SolveError::NonFiniteError),
    };
    if outcome.f > e0 {
        return Ok((lf.clone(), unchanged(outcome.iterations)));
    }

    let repaired = ParamVector {
        labels: params.labels.clone(),
        values: outcome.x,
    };
    let max_point_displacement = params
        .values
        .chunks(2)
        .zip(repaired.values.chunks(2))
        .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        .fold(0.0, f64::max);
    let report = SolveReport {
        initial_error: e0,
        final_error: outcome.f,
        iterations: outcome.iterations,
        converged: outcome.f < SOLVE_EPS,
        max_point_displacement,
    };
    debug_assert!(outcome.termination != Termination::ObjectiveTolerance || report.converged);
    Ok((repaired.apply_to(lf)?, report))
}
