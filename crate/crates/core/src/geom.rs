//! Plane primitives: vectors, rigid affine maps, intersections and angles.
//!
//! Rotations are counter-clockwise for positive degrees (model +y is up).
//! Everything is `f64` with explicit tolerances.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum separation for two points to define a direction.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// Lines whose directions differ by less than this many radians are parallel.
pub const PARALLEL_EPS: f64 = 1e-10;
/// Tangency / deduplication tolerance for line-circle intersections.
pub const TANGENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("reflection axis points coincide")]
    DegenerateAxis,
    #[error("line endpoints coincide")]
    DegenerateLine,
    #[error("angle arm has zero length")]
    DegenerateAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn midpoint(self, o: Vec2) -> Vec2 {
        Vec2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// `p ↦ L·p + t` with `L = [[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn apply(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            self.a * p.x + self.b * p.y + self.tx,
            self.c * p.x + self.d * p.y + self.ty,
        )
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &AffineMap) -> AffineMap {
        AffineMap {
            a: self.a * first.a + self.b * first.c,
            b: self.a * first.b + self.b * first.d,
            c: self.c * first.a + self.d * first.c,
            d: self.c * first.b + self.d * first.d,
            tx: self.a * first.tx + self.b * first.ty + self.tx,
            ty: self.c * first.tx + self.d * first.ty + self.ty,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest absolute difference over the six coefficients.
    pub fn max_deviation(&self, o: &AffineMap) -> f64 {
        [
            self.a - o.a,
            self.b - o.b,
            self.c - o.c,
            self.d - o.d,
            self.tx - o.tx,
            self.ty - o.ty,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Counter-clockwise rotation by `degrees` about `center`.
pub fn rotation_map(center: Vec2, degrees: f64) -> AffineMap {
    let (s, c) = degrees.to_radians().sin_cos();
    // p' = R (p - center) + center
    AffineMap {
        a: c,
        b: -s,
        c: s,
        d: c,
        tx: center.x - (c * center.x - s * center.y),
        ty: center.y - (s * center.x + c * center.y),
    }
}

/// Reflection across the line through `p` and `q`.
pub fn reflection_map(p: Vec2, q: Vec2) -> Result<AffineMap, GeomError> {
    let dir = q - p;
    let len = dir.norm();
    if len <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateAxis);
    }
    let u = dir * (1.0 / len);
    // L = 2 u uᵀ - I
    let a = 2.0 * u.x * u.x - 1.0;
    let b = 2.0 * u.x * u.y;
    let d = 2.0 * u.y * u.y - 1.0;
    Ok(AffineMap {
        a,
        b,
        c: b,
        d,
        tx: p.x - (a * p.x + b * p.y),
        ty: p.y - (b * p.x + d * p.y),
    })
}

pub fn translation_map(v: Vec2) -> AffineMap {
    AffineMap {
        tx: v.x,
        ty: v.y,
        ..AffineMap::IDENTITY
    }
}

pub fn apply_map(m: &AffineMap, p: Vec2) -> Vec2 {
    m.apply(p)
}

/// Intersection of two infinite carriers, with flags telling whether the
/// point also lies on each finite segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntersection {
    pub point: Vec2,
    /// Carrier parameter along the first segment (0 at its start, 1 at its end).
    pub t_first: f64,
    pub t_second: f64,
    pub on_first: bool,
    pub on_second: bool,
}

impl LineIntersection {
    pub fn within_both(&self) -> bool {
        self.on_first && self.on_second
    }
}

/// Slack on segment parameters when deciding "inside segment".
pub const SEGMENT_PARAM_EPS: f64 = 1e-9;

fn in_unit(t: f64) -> bool {
    (-SEGMENT_PARAM_EPS..=1.0 + SEGMENT_PARAM_EPS).contains(&t)
}

pub fn intersect_lines(
    l1: (Vec2, Vec2),
    l2: (Vec2, Vec2),
) -> Result<Option<LineIntersection>, GeomError> {
    let d1 = l1.1 - l1.0;
    let d2 = l2.1 - l2.0;
    let n1 = d1.norm();
    let n2 = d2.norm();
    if n1 <= DEGENERATE_EPS || n2 <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateLine);
    }
    let denom = d1.cross(d2);
    if (denom / (n1 * n2)).abs() < PARALLEL_EPS {
        return Ok(None);
    }
    let w = l2.0 - l1.0;
    let t = w.cross(d2) / denom;
    let s = w.cross(d1) / denom;
    // Average both parameterisations so the result does not depend on argument order.
    let point = (l1.0 + d1 * t).midpoint(l2.0 + d2 * s);
    Ok(Some(LineIntersection {
        point,
        t_first: t,
        t_second: s,
        on_first: in_unit(t),
        on_second: in_unit(s),
    }))
}

/// Parameter of the orthogonal projection of `p` on the carrier of `seg`.
pub fn segment_param(seg: (Vec2, Vec2), p: Vec2) -> f64 {
    let d = seg.1 - seg.0;
    (p - seg.0).dot(d) / d.norm_sq()
}

pub fn point_on_segment(seg: (Vec2, Vec2), p: Vec2, tol: f64) -> bool {
    let d = seg.1 - seg.0;
    let len = d.norm();
    if len <= DEGENERATE_EPS {
        return p.distance(seg.0) <= tol;
    }
    let dist = d.cross(p - seg.0).abs() / len;
    let t = segment_param(seg, p);
    dist <= tol && t * len >= -tol && (t - 1.0) * len <= tol
}

/// Intersections of the infinite carrier of `line` with a circle, ordered
/// along the line direction. A tangent line yields one point.
pub fn intersect_line_circle(
    line: (Vec2, Vec2),
    center: Vec2,
    radius: f64,
) -> Result<Vec<Vec2>, GeomError> {
    let d = line.1 - line.0;
    let len = d.norm();
    if len <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateLine);
    }
    let u = d * (1.0 / len);
    let foot = line.0 + u * (center - line.0).dot(u);
    let dist = foot.distance(center);
    if dist > radius + TANGENT_EPS {
        return Ok(Vec::new());
    }
    let h_sq = radius * radius - dist * dist;
    if h_sq <= 0.0 || h_sq.sqrt() <= TANGENT_EPS {
        return Ok(vec![foot]);
    }
    let h = h_sq.sqrt();
    Ok(vec![foot - u * h, foot + u * h])
}

/// Intersections of two circles (0, 1 or 2 points). Concentric circles yield none.
pub fn intersect_circles(c1: Vec2, r1: f64, c2: Vec2, r2: f64) -> Vec<Vec2> {
    let d = c2 - c1;
    let dist = d.norm();
    if dist <= DEGENERATE_EPS || dist > r1 + r2 + TANGENT_EPS || dist < (r1 - r2).abs() - TANGENT_EPS
    {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist);
    let u = d * (1.0 / dist);
    let base = c1 + u * a;
    let h_sq = r1 * r1 - a * a;
    if h_sq <= 0.0 || h_sq.sqrt() <= TANGENT_EPS {
        return vec![base];
    }
    let h = h_sq.sqrt();
    let perp = Vec2::new(-u.y, u.x);
    vec![base - perp * h, base + perp * h]
}

/// Unsigned angle `a-vertex-b` in degrees, in `[0, 180]`.
pub fn angle_measure(a: Vec2, vertex: Vec2, b: Vec2) -> Result<f64, GeomError> {
    let p = a - vertex;
    let q = b - vertex;
    let np = p.norm();
    let nq = q.norm();
    if np <= DEGENERATE_EPS || nq <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateAngle);
    }
    let cos = (p.dot(q) / (np * nq)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}
