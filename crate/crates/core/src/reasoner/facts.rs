//! Normalized geometric statements and the provenance-carrying fact store.

use std::collections::HashMap;
use std::fmt;

use super::diagram::{Diagram, Pt};

/// Unordered segment, `0 < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seg(pub Pt, pub Pt);

impl Seg {
    pub fn new(a: Pt, b: Pt) -> Self {
        if a <= b {
            Seg(a, b)
        } else {
            Seg(b, a)
        }
    }
}

/// Angle at `vertex` between two rays, each named by its canonical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle {
    pub vertex: Pt,
    pub arms: (Pt, Pt),
}

impl Angle {
    /// `None` when an arm is degenerate or both arms are the same ray.
    pub fn new(d: &Diagram, a: Pt, vertex: Pt, b: Pt) -> Option<Self> {
        if a == vertex || b == vertex || d.coincide(a, vertex) || d.coincide(b, vertex) {
            return None;
        }
        let (ra, rb) = (d.ray(vertex, a), d.ray(vertex, b));
        if ra == rb {
            return None;
        }
        Some(Angle {
            vertex,
            arms: (ra.min(rb), ra.max(rb)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statement {
    EqualSegments(Seg, Seg),
    EqualAngles(Angle, Angle),
    /// The size lives in [`Fact::value`].
    AngleValue(Angle),
    Parallel(Seg, Seg),
    Perpendicular(Seg, Seg),
    /// `0[i]` corresponds to `1[i]`.
    CongruentTriangles([Pt; 3], [Pt; 3]),
    Collinear([Pt; 3]),
    Midpoint(Pt, Seg),
}

fn ordered<T: Ord>(a: T, b: T) -> (T, T) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Statement {
    /// `None` for trivial statements (a thing equal to itself).
    pub fn equal_segments(a: Seg, b: Seg) -> Option<Self> {
        (a != b).then(|| {
            let (a, b) = ordered(a, b);
            Statement::EqualSegments(a, b)
        })
    }

    pub fn equal_angles(a: Angle, b: Angle) -> Option<Self> {
        (a != b).then(|| {
            let (a, b) = ordered(a, b);
            Statement::EqualAngles(a, b)
        })
    }

    pub fn parallel(a: Seg, b: Seg) -> Option<Self> {
        (a != b).then(|| {
            let (a, b) = ordered(a, b);
            Statement::Parallel(a, b)
        })
    }

    pub fn perpendicular(a: Seg, b: Seg) -> Option<Self> {
        (a != b).then(|| {
            let (a, b) = ordered(a, b);
            Statement::Perpendicular(a, b)
        })
    }

    /// Canonical correspondence: pairs sorted, smaller side first.
    pub fn congruent(p: [Pt; 3], q: [Pt; 3]) -> Option<Self> {
        let mut ab: Vec<(Pt, Pt)> = (0..3).map(|i| (p[i], q[i])).collect();
        let mut ba: Vec<(Pt, Pt)> = (0..3).map(|i| (q[i], p[i])).collect();
        ab.sort_unstable();
        ba.sort_unstable();
        let best = ab.min(ba);
        if best.iter().all(|(x, y)| x == y) {
            return None;
        }
        Some(Statement::CongruentTriangles(
            [best[0].0, best[1].0, best[2].0],
            [best[0].1, best[1].1, best[2].1],
        ))
    }

    pub fn collinear(mut p: [Pt; 3]) -> Self {
        p.sort_unstable();
        Statement::Collinear(p)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Statement::EqualSegments(..) => "equal_segments",
            Statement::EqualAngles(..) => "equal_angles",
            Statement::AngleValue(..) => "angle_value",
            Statement::Parallel(..) => "parallel",
            Statement::Perpendicular(..) => "perpendicular",
            Statement::CongruentTriangles(..) => "congruent_triangles",
            Statement::Collinear(..) => "collinear",
            Statement::Midpoint(..) => "midpoint",
        }
    }

    /// Point labels in argument order; angles read `arm vertex arm`.
    pub fn args(&self, d: &Diagram) -> Vec<String> {
        let n = |p: &Pt| d.name(*p).to_string();
        let seg = |s: &Seg| [n(&s.0), n(&s.1)];
        let ang = |a: &Angle| [n(&a.arms.0), n(&a.vertex), n(&a.arms.1)];
        match self {
            Statement::EqualSegments(a, b)
            | Statement::Parallel(a, b)
            | Statement::Perpendicular(a, b) => seg(a).into_iter().chain(seg(b)).collect(),
            Statement::EqualAngles(a, b) => ang(a).into_iter().chain(ang(b)).collect(),
            Statement::AngleValue(a) => ang(a).to_vec(),
            Statement::CongruentTriangles(p, q) => p.iter().chain(q).map(n).collect(),
            Statement::Collinear(p) => p.iter().map(n).collect(),
            Statement::Midpoint(m, s) => vec![n(m), n(&s.0), n(&s.1)],
        }
    }

    /// Check the statement against the coordinates (angles and lengths to
    /// `tol` relative, directions to `tol` absolute on unit vectors).
    pub fn holds_numerically(&self, d: &Diagram, value: Option<f64>, tol: f64) -> bool {
        let len = |s: &Seg| d.length(s.0, s.1);
        let ang = |a: &Angle| d.measure(a.arms.0, a.vertex, a.arms.1);
        let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
        let dir = |s: &Seg| {
            let v = d.at(s.1) - d.at(s.0);
            v * (1.0 / v.norm())
        };
        match self {
            Statement::EqualSegments(a, b) => close(len(a), len(b)),
            Statement::EqualAngles(a, b) => close(ang(a), ang(b)),
            Statement::AngleValue(a) => value.is_some_and(|v| close(ang(a), v)),
            Statement::Parallel(a, b) => dir(a).cross(dir(b)).abs() <= tol,
            Statement::Perpendicular(a, b) => dir(a).dot(dir(b)).abs() <= tol,
            Statement::CongruentTriangles(p, q) => (0..3).all(|i| {
                let j = (i + 1) % 3;
                close(d.length(p[i], p[j]), d.length(q[i], q[j]))
            }),
            Statement::Collinear([a, b, c]) => d.collinear(*a, *b, *c),
            Statement::Midpoint(m, s) => {
                d.at(*m).distance(d.at(s.0).midpoint(d.at(s.1))) <= tol * len(s).max(1.0)
            }
        }
    }
}

/// Where a fact came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Supplied by the caller.
    Seed,
    /// Declared relations, by index into the form's relation list.
    Relation(Vec<usize>),
    /// Incidence created by a construction step (e.g. a point labeled at a
    /// midpoint), re-checked against the coordinates.
    Construction(String),
    Rule {
        rule: &'static str,
        premises: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub statement: Statement,
    pub value: Option<f64>,
    pub provenance: Provenance,
}

/// Facts in derivation order; premises always precede their conclusions.
#[derive(Debug, Clone, Default)]
pub struct FactSet {
    facts: Vec<Fact>,
    index: HashMap<Statement, usize>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn get(&self, i: usize) -> &Fact {
        &self.facts[i]
    }

    pub fn find(&self, s: &Statement) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &Statement) -> bool {
        self.index.contains_key(s)
    }

    /// Add a fact unless its statement is already known. Returns whether it
    /// was new.
    pub fn insert(&mut self, fact: Fact) -> bool {
        if self.index.contains_key(&fact.statement) {
            return false;
        }
        if let Provenance::Rule { premises, .. } = &fact.provenance {
            debug_assert!(premises.iter().all(|&p| p < self.facts.len()));
        }
        self.index.insert(fact.statement, self.facts.len());
        self.facts.push(fact);
        true
    }

    pub fn angle_value(&self, a: &Angle) -> Option<(f64, usize)> {
        let i = self.find(&Statement::AngleValue(*a))?;
        Some((self.facts[i].value?, i))
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.facts.iter().map(|f| &f.statement)
    }

    /// Indices of every fact the given one depends on, itself included,
    /// in increasing order.
    pub fn support(&self, i: usize) -> Vec<usize> {
        let mut seen = vec![false; self.facts.len()];
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            if std::mem::replace(&mut seen[j], true) {
                continue;
            }
            if let Provenance::Rule { premises, .. } = &self.facts[j].provenance {
                stack.extend(premises);
            }
        }
        (0..self.facts.len()).filter(|&j| seen[j]).collect()
    }
}

/// Human-readable rendering of one fact against a diagram.
pub struct DisplayFact<'a> {
    pub fact: &'a Fact,
    pub diagram: &'a Diagram,
}

impl fmt::Display for DisplayFact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.fact.statement;
        let args = s.args(self.diagram);
        let group = |chunk: usize| -> Vec<String> { args.chunks(chunk).map(|c| c.join("")).collect() };
        match s {
            Statement::EqualSegments(..) | Statement::Parallel(..) | Statement::Perpendicular(..) => {
                let g = group(2);
                let op = match s {
                    Statement::EqualSegments(..) => "=",
                    Statement::Parallel(..) => "∥",
                    _ => "⊥",
                };
                write!(f, "{} {op} {}", g[0], g[1])
            }
            Statement::EqualAngles(..) => {
                let g = group(3);
                write!(f, "∠{} = ∠{}", g[0], g[1])
            }
            Statement::AngleValue(..) => write!(
                f,
                "∠{} = {}°",
                args.join(""),
                crate::canonical::fmt_real(self.fact.value.unwrap_or(f64::NAN))
            ),
            Statement::CongruentTriangles(..) => {
                let g = group(3);
                write!(f, "△{} ≅ △{}", g[0], g[1])
            }
            Statement::Collinear(..) => write!(f, "{} collinear", args.join("")),
            Statement::Midpoint(..) => write!(f, "{} midpoint of {}{}", args[0], args[1], args[2]),
        }
    }
}
