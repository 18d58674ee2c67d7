//! Incidence read off the coordinates: which pairs are joined by drawn
//! strokes, which points share a ray from a vertex, which are collinear.
//!
//! Metric facts (lengths, angle sizes) are never read from here; the rules
//! only use the diagram for configuration.

use std::collections::HashMap;

use crate::geom::Vec2;
use crate::logic_form::{LogicForm, Origin};

/// Index of a point in [`Diagram::labels`].
pub type Pt = u16;

/// Relative tolerance for incidence tests.
pub const INCIDENCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Diagram {
    pub labels: Vec<String>,
    pub pos: Vec<Vec2>,
    index: HashMap<String, Pt>,
    tol: f64,
    joined: Vec<bool>,
    /// `ray[v * n + p]`: smallest point on the ray from `v` through `p`.
    ray: Vec<Pt>,
    /// Labels created as transform images.
    pub images: Vec<bool>,
    pub auxiliary: Vec<bool>,
}

impl Diagram {
    pub fn new(lf: &LogicForm) -> Self {
        let labels: Vec<String> = lf.points.iter().map(|p| p.name.clone()).collect();
        let pos: Vec<Vec2> = lf.points.iter().map(|p| p.pos()).collect();
        let n = labels.len();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as Pt))
            .collect();
        let scale = lf
            .bounds()
            .map(|(lo, hi)| (hi.x - lo.x).max(hi.y - lo.y))
            .unwrap_or(1.0)
            .max(1.0);
        let tol = INCIDENCE_EPS * scale;

        let mut d = Diagram {
            labels,
            pos,
            index,
            tol,
            joined: vec![false; n * n],
            ray: vec![0; n * n],
            images: vec![false; n],
            auxiliary: lf.points.iter().map(|p| p.auxiliary).collect(),
        };

        for o in &lf.objects {
            if let Some(Origin::Image { .. }) = o.origin {
                for l in o.labels() {
                    if let Some(i) = d.idx(l) {
                        d.images[i as usize] = true;
                    }
                }
            }
            for (a, b) in o.segments() {
                let (Some(a), Some(b)) = (d.idx(a), d.idx(b)) else {
                    continue;
                };
                let on: Vec<Pt> = (0..n as Pt).filter(|&p| d.on_segment(p, a, b)).collect();
                for &p in &on {
                    for &q in &on {
                        if p != q {
                            d.joined[p as usize * n + q as usize] = true;
                        }
                    }
                }
            }
        }

        for v in 0..n {
            for p in 0..n {
                if p == v {
                    continue;
                }
                let rep = (0..n)
                    .find(|&q| q != v && d.same_ray(v as Pt, p as Pt, q as Pt))
                    .unwrap_or(p);
                d.ray[v * n + p] = rep as Pt;
            }
        }
        d
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn idx(&self, label: &str) -> Option<Pt> {
        self.index.get(label).copied()
    }

    pub fn name(&self, p: Pt) -> &str {
        &self.labels[p as usize]
    }

    pub fn at(&self, p: Pt) -> Vec2 {
        self.pos[p as usize]
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn coincide(&self, p: Pt, q: Pt) -> bool {
        self.at(p).distance(self.at(q)) <= self.tol
    }

    /// Distance from `p` to the carrier of `ab`, scaled to stay meaningful for
    /// short segments.
    fn off_line(&self, p: Pt, a: Pt, b: Pt) -> f64 {
        let d = self.at(b) - self.at(a);
        let len = d.norm();
        if len <= self.tol {
            return f64::INFINITY;
        }
        (d.cross(self.at(p) - self.at(a)) / len).abs()
    }

    pub fn collinear(&self, a: Pt, b: Pt, c: Pt) -> bool {
        if self.coincide(a, b) {
            return true;
        }
        self.off_line(c, a, b) <= self.tol
    }

    /// `p` lies on the closed segment `ab`.
    pub fn on_segment(&self, p: Pt, a: Pt, b: Pt) -> bool {
        if self.off_line(p, a, b) > self.tol {
            return false;
        }
        let d = self.at(b) - self.at(a);
        let t = (self.at(p) - self.at(a)).dot(d) / d.norm_sq();
        let slack = self.tol / d.norm();
        (-slack..=1.0 + slack).contains(&t)
    }

    /// `p` lies strictly between `a` and `b`.
    pub fn between(&self, p: Pt, a: Pt, b: Pt) -> bool {
        self.on_segment(p, a, b) && !self.coincide(p, a) && !self.coincide(p, b)
    }

    /// `p` and `q` are on the same ray from `v` (both distinct from `v`).
    pub fn same_ray(&self, v: Pt, p: Pt, q: Pt) -> bool {
        if self.coincide(v, p) || self.coincide(v, q) {
            return false;
        }
        let a = self.at(p) - self.at(v);
        let b = self.at(q) - self.at(v);
        a.dot(b) > 0.0 && self.collinear(v, p, q)
    }

    /// Points on opposite rays from `v`.
    pub fn opposite(&self, v: Pt, p: Pt, q: Pt) -> bool {
        self.between(v, p, q)
    }

    pub fn joined(&self, p: Pt, q: Pt) -> bool {
        self.joined[p as usize * self.len() + q as usize]
    }

    /// Canonical representative of the ray from `v` through `p`.
    pub fn ray(&self, v: Pt, p: Pt) -> Pt {
        self.ray[v as usize * self.len() + p as usize]
    }

    /// Canonical representatives of the drawn rays leaving `v`.
    pub fn arms(&self, v: Pt) -> Vec<Pt> {
        let mut out: Vec<Pt> = (0..self.len() as Pt)
            .filter(|&p| p != v && self.joined(v, p) && !self.coincide(v, p))
            .map(|p| self.ray(v, p))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sign of the side of line `ab` that `p` is on (0 when on the line).
    pub fn side(&self, p: Pt, a: Pt, b: Pt) -> i8 {
        if self.off_line(p, a, b) <= self.tol {
            return 0;
        }
        let c = (self.at(b) - self.at(a)).cross(self.at(p) - self.at(a));
        if c > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Triangles whose three sides are drawn, as sorted vertex triples.
    pub fn triangles(&self) -> Vec<[Pt; 3]> {
        let n = self.len() as Pt;
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if !self.joined(a, b) {
                    continue;
                }
                for c in b + 1..n {
                    if self.joined(a, c) && self.joined(b, c) && !self.collinear(a, b, c) {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }

    /// All points on the line through `a` and `b`.
    pub fn line_points(&self, a: Pt, b: Pt) -> Vec<Pt> {
        (0..self.len() as Pt)
            .filter(|&p| self.collinear(a, b, p))
            .collect()
    }

    /// Angle size in degrees, for soundness checks only.
    pub fn measure(&self, a: Pt, v: Pt, b: Pt) -> f64 {
        let p = self.at(a) - self.at(v);
        let q = self.at(b) - self.at(v);
        p.cross(q).abs().atan2(p.dot(q)).to_degrees()
    }

    pub fn length(&self, a: Pt, b: Pt) -> f64 {
        self.at(a).distance(self.at(b))
    }
}
