//! The declarative diagram language.
//!
//! A [`LogicForm`] lists named points, drawable objects (segments, circles,
//! polygons), the relations the coordinates are supposed to satisfy, and
//! free-text annotations. It is the single source of truth for rendering,
//! constraint repair and deduction.
//!
//! Canonical JSON: object keys sorted, points sorted by name, reals printed
//! with nine significant digits and at least nine decimal places. See `docs/formats.md` for the schema.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::canonical::{self, real_value};
use crate::geom::Vec2;

/// Default tolerance for [`diff_forms`], in model units.
pub const DEFAULT_DIFF_EPS: f64 = 1e-6;

/// Annotation key holding the machine-readable question.
pub const GOAL_ANNOTATION: &str = "goal";

/// `[A-Za-z][A-Za-z0-9_]*` optionally followed by primes (`A'`, `B''`).
pub fn is_valid_label(s: &str) -> bool {
    let body = s.trim_end_matches('\'');
    let mut chars = body.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointDecl {
    pub name: String,
    pub x: f64,
    pub y: f64,
    /// Created by an action rather than given with the problem.
    pub auxiliary: bool,
}

impl PointDecl {
    pub fn new(name: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            name: name.into(),
            x,
            y,
            auxiliary: false,
        }
    }

    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Ordered pair of point labels.
pub type Seg = [String; 2];

pub fn seg(a: &str, b: &str) -> Seg {
    [a.to_string(), b.to_string()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectKind {
    Circle,
    Line,
    Polygon,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Circle => "circle",
            ObjectKind::Line => "line",
            ObjectKind::Polygon => "polygon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Line(Seg),
    Circle { center: String, radius: f64 },
    Polygon(Vec<String>),
}

/// The rigid motion that produced a transformed copy.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Reflect { axis: Seg },
    Rotate { center: String, degrees: f64 },
    Translate { vector: Vec2 },
}

/// How an object entered the form after the initial diagram.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    /// Auxiliary segment from `draw_line`.
    Drawn,
    /// Copy of another object; `of[i]` is the pre-image of the i-th label.
    Image { of: Vec<String>, transform: Transform },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDecl {
    pub shape: Shape,
    pub origin: Option<Origin>,
}

impl ObjectDecl {
    pub fn line(a: &str, b: &str) -> Self {
        Self {
            shape: Shape::Line(seg(a, b)),
            origin: None,
        }
    }

    pub fn circle(center: &str, radius: f64) -> Self {
        Self {
            shape: Shape::Circle {
                center: center.to_string(),
                radius,
            },
            origin: None,
        }
    }

    pub fn polygon(labels: &[&str]) -> Self {
        Self {
            shape: Shape::Polygon(labels.iter().map(|s| s.to_string()).collect()),
            origin: None,
        }
    }

    pub fn kind(&self) -> ObjectKind {
        match self.shape {
            Shape::Line(_) => ObjectKind::Line,
            Shape::Circle { .. } => ObjectKind::Circle,
            Shape::Polygon(_) => ObjectKind::Polygon,
        }
    }

    pub fn is_auxiliary(&self) -> bool {
        self.origin.is_some()
    }

    /// Point labels in declaration order (the center for a circle).
    pub fn labels(&self) -> Vec<&str> {
        match &self.shape {
            Shape::Line([a, b]) => vec![a, b],
            Shape::Circle { center, .. } => vec![center],
            Shape::Polygon(pts) => pts.iter().map(String::as_str).collect(),
        }
    }

    /// Straight pieces: the segment itself or the polygon's edges.
    pub fn segments(&self) -> Vec<(&str, &str)> {
        match &self.shape {
            Shape::Line([a, b]) => vec![(a, b)],
            Shape::Circle { .. } => Vec::new(),
            Shape::Polygon(pts) => (0..pts.len())
                .map(|i| (pts[i].as_str(), pts[(i + 1) % pts.len()].as_str()))
                .collect(),
        }
    }

    /// Reference string used by actions: `line_AB`, `circle_O`,
    /// `triangle_ABC`, `quadrilateral_ABCD`, `polygon_ABCDE`.
    pub fn reference(&self) -> String {
        let labels = self.labels().concat();
        let prefix = match &self.shape {
            Shape::Line(_) => "line",
            Shape::Circle { .. } => "circle",
            Shape::Polygon(p) if p.len() == 3 => "triangle",
            Shape::Polygon(p) if p.len() == 4 => "quadrilateral",
            Shape::Polygon(_) => "polygon",
        };
        format!("{prefix}_{labels}")
    }

    /// Concatenations of the labels this object answers to.
    fn reference_spellings(&self) -> Vec<String> {
        match &self.shape {
            Shape::Line([a, b]) => vec![format!("{a}{b}"), format!("{b}{a}")],
            Shape::Circle { center, .. } => vec![center.clone()],
            Shape::Polygon(pts) => {
                let n = pts.len();
                let mut out = Vec::with_capacity(2 * n);
                for start in 0..n {
                    out.push((0..n).map(|i| pts[(start + i) % n].as_str()).collect());
                    out.push((0..n).map(|i| pts[(start + n - i) % n].as_str()).collect());
                }
                out
            }
        }
    }

    /// Order-insensitive identity used when diffing.
    fn identity(&self) -> (ObjectKind, Vec<String>) {
        match &self.shape {
            Shape::Line([a, b]) => {
                let mut v = vec![a.clone(), b.clone()];
                v.sort();
                (ObjectKind::Line, v)
            }
            Shape::Circle { center, .. } => (ObjectKind::Circle, vec![center.clone()]),
            Shape::Polygon(pts) => {
                let mut best: Option<Vec<String>> = None;
                let n = pts.len();
                for start in 0..n {
                    for dir in [1usize, n - 1] {
                        let cand: Vec<String> =
                            (0..n).map(|i| pts[(start + i * dir) % n].clone()).collect();
                        if best.as_ref().map_or(true, |b| cand < *b) {
                            best = Some(cand);
                        }
                    }
                }
                (ObjectKind::Polygon, best.unwrap_or_default())
            }
        }
    }
}

impl fmt::Display for ObjectDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Line([a, b]) => write!(f, "line {a}{b}"),
            Shape::Circle { center, radius } => {
                write!(f, "circle {center} r={}", canonical::fmt_real(*radius))
            }
            Shape::Polygon(p) => write!(f, "polygon {}", p.concat()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    PointOnLine,
    PointOnCircle,
    Perpendicular,
    Parallel,
    EqualLength,
    FixedLength,
    FixedAngle,
    Collinear,
    Midpoint,
}

impl RelationKind {
    pub const ALL: [RelationKind; 9] = [
        RelationKind::PointOnLine,
        RelationKind::PointOnCircle,
        RelationKind::Perpendicular,
        RelationKind::Parallel,
        RelationKind::EqualLength,
        RelationKind::FixedLength,
        RelationKind::FixedAngle,
        RelationKind::Collinear,
        RelationKind::Midpoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::PointOnLine => "point_on_line",
            RelationKind::PointOnCircle => "point_on_circle",
            RelationKind::Perpendicular => "perpendicular",
            RelationKind::Parallel => "parallel",
            RelationKind::EqualLength => "equal_length",
            RelationKind::FixedLength => "fixed_length",
            RelationKind::FixedAngle => "fixed_angle",
            RelationKind::Collinear => "collinear",
            RelationKind::Midpoint => "midpoint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// A relationship the coordinates should satisfy. Lines are given by two
/// point labels; a circle is named by its center label.
#[derive(Debug, Clone, PartialEq)]
pub enum Relation {
    PointOnLine { point: String, line: Seg },
    PointOnCircle { point: String, center: String },
    Perpendicular(Seg, Seg),
    Parallel(Seg, Seg),
    EqualLength(Seg, Seg),
    /// Length in model units.
    FixedLength(Seg, f64),
    /// Angle `[a, vertex, b]` in degrees.
    FixedAngle([String; 3], f64),
    Collinear([String; 3]),
    Midpoint { point: String, segment: Seg },
}

impl Relation {
    pub fn kind(&self) -> RelationKind {
        match self {
            Relation::PointOnLine { .. } => RelationKind::PointOnLine,
            Relation::PointOnCircle { .. } => RelationKind::PointOnCircle,
            Relation::Perpendicular(..) => RelationKind::Perpendicular,
            Relation::Parallel(..) => RelationKind::Parallel,
            Relation::EqualLength(..) => RelationKind::EqualLength,
            Relation::FixedLength(..) => RelationKind::FixedLength,
            Relation::FixedAngle(..) => RelationKind::FixedAngle,
            Relation::Collinear(..) => RelationKind::Collinear,
            Relation::Midpoint { .. } => RelationKind::Midpoint,
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            Relation::PointOnLine { point, line } => vec![point, &line[0], &line[1]],
            Relation::PointOnCircle { point, center } => vec![point, center],
            Relation::Perpendicular(a, b)
            | Relation::Parallel(a, b)
            | Relation::EqualLength(a, b) => vec![&a[0], &a[1], &b[0], &b[1]],
            Relation::FixedLength(s, _) => vec![&s[0], &s[1]],
            Relation::FixedAngle(p, _) | Relation::Collinear(p) => {
                p.iter().map(String::as_str).collect()
            }
            Relation::Midpoint { point, segment } => vec![point, &segment[0], &segment[1]],
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Relation::FixedLength(_, v) | Relation::FixedAngle(_, v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind().as_str(), self.labels().join(","))?;
        if let Some(v) = self.value() {
            write!(f, "={}", canonical::fmt_real(v))?;
        }
        Ok(())
    }
}

/// The declarative diagram state. `points` is kept sorted by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogicForm {
    pub points: Vec<PointDecl>,
    pub objects: Vec<ObjectDecl>,
    pub relations: Vec<Relation>,
    pub annotations: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectRefError {
    #[error("unknown object `{0}`")]
    Unknown(String),
    #[error("object reference `{0}` is ambiguous")]
    Ambiguous(String),
}

impl LogicForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_point(mut self, name: &str, x: f64, y: f64) -> Self {
        self.insert_point(PointDecl::new(name, x, y));
        self
    }

    pub fn with_object(mut self, obj: ObjectDecl) -> Self {
        self.objects.push(obj);
        self
    }

    pub fn with_line(self, a: &str, b: &str) -> Self {
        self.with_object(ObjectDecl::line(a, b))
    }

    pub fn with_relation(mut self, r: Relation) -> Self {
        self.relations.push(r);
        self
    }

    pub fn with_annotation(mut self, key: &str, text: &str) -> Self {
        self.annotations.insert(key.to_string(), text.to_string());
        self
    }

    /// Insert keeping the name order; an existing point with the same name is
    /// left in place and the new one placed after it.
    pub fn insert_point(&mut self, p: PointDecl) {
        let idx = self.points.partition_point(|q| q.name <= p.name);
        self.points.insert(idx, p);
    }

    pub fn point(&self, name: &str) -> Option<&PointDecl> {
        self.points
            .binary_search_by(|p| p.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn point_mut(&mut self, name: &str) -> Option<&mut PointDecl> {
        self.points
            .binary_search_by(|p| p.name.as_str().cmp(name))
            .ok()
            .map(move |i| &mut self.points[i])
    }

    pub fn pos(&self, name: &str) -> Option<Vec2> {
        self.point(name).map(PointDecl::pos)
    }

    pub fn has_point(&self, name: &str) -> bool {
        self.point(name).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.objects.is_empty() && self.relations.is_empty()
    }

    pub fn circle_radius(&self, center: &str) -> Option<f64> {
        self.objects.iter().find_map(|o| match &o.shape {
            Shape::Circle { center: c, radius } if c == center => Some(*radius),
            _ => None,
        })
    }

    pub fn has_line(&self, a: &str, b: &str) -> bool {
        self.objects.iter().any(|o| match &o.shape {
            Shape::Line([p, q]) => (p == a && q == b) || (p == b && q == a),
            _ => false,
        })
    }

    pub fn goal(&self) -> Option<&str> {
        self.annotations.get(GOAL_ANNOTATION).map(String::as_str)
    }

    /// Resolve `kind_LABELS` (e.g. `triangle_ABC`, `line_BA`, `circle_O`).
    pub fn resolve_object(&self, reference: &str) -> Result<usize, ObjectRefError> {
        let unknown = || ObjectRefError::Unknown(reference.to_string());
        let (prefix, labels) = reference.split_once('_').ok_or_else(unknown)?;
        let accepts = |o: &ObjectDecl| match (prefix, &o.shape) {
            ("line" | "segment", Shape::Line(_)) => true,
            ("circle", Shape::Circle { .. }) => true,
            ("polygon", Shape::Polygon(_)) => true,
            ("triangle", Shape::Polygon(p)) => p.len() == 3,
            ("quadrilateral" | "quad", Shape::Polygon(p)) => p.len() == 4,
            _ => false,
        };
        let hits: Vec<usize> = self
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| accepts(o) && o.reference_spellings().iter().any(|s| s == labels))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => Err(unknown()),
            [one] => Ok(*one),
            _ => Err(ObjectRefError::Ambiguous(reference.to_string())),
        }
    }

    /// Axis-aligned bounds of all points and circles, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec2, Vec2)> {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: Vec2, r: f64| {
            lo.x = lo.x.min(p.x - r);
            lo.y = lo.y.min(p.y - r);
            hi.x = hi.x.max(p.x + r);
            hi.y = hi.y.max(p.y + r);
        };
        for p in &self.points {
            grow(p.pos(), 0.0);
        }
        for o in &self.objects {
            if let Shape::Circle { center, radius } = &o.shape {
                if let Some(c) = self.pos(center) {
                    grow(c, radius.abs());
                }
            }
        }
        (!self.points.is_empty()).then_some((lo, hi))
    }

    pub fn to_value(&self) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|p| {
                let mut m = Map::new();
                m.insert("name".into(), Value::from(p.name.clone()));
                m.insert("x".into(), real_value(p.x));
                m.insert("y".into(), real_value(p.y));
                if p.auxiliary {
                    m.insert("auxiliary".into(), Value::Bool(true));
                }
                Value::Object(m)
            })
            .collect();
        let objects: Vec<Value> = self.objects.iter().map(object_to_value).collect();
        let relations: Vec<Value> = self.relations.iter().map(relation_to_value).collect();
        let mut top = Map::new();
        top.insert("points".into(), Value::Array(points));
        top.insert("objects".into(), Value::Array(objects));
        top.insert("relations".into(), Value::Array(relations));
        if !self.annotations.is_empty() {
            top.insert(
                "annotations".into(),
                Value::Object(
                    self.annotations
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::from(v.clone())))
                        .collect(),
                ),
            );
        }
        Value::Object(top)
    }

    pub fn to_canonical_string(&self) -> String {
        serialize_logic_form(self)
    }
}

fn seg_value(s: &Seg) -> Value {
    json!([s[0], s[1]])
}

fn transform_to_value(t: &Transform) -> Value {
    match t {
        Transform::Reflect { axis } => json!({"op": "reflect", "axis": seg_value(axis)}),
        Transform::Rotate { center, degrees } => {
            json!({"op": "rotate", "center": center, "degrees": real_value(*degrees)})
        }
        Transform::Translate { vector } => {
            json!({"op": "translate", "vector": [real_value(vector.x), real_value(vector.y)]})
        }
    }
}

fn object_to_value(o: &ObjectDecl) -> Value {
    let mut v = match &o.shape {
        Shape::Line(s) => json!({"type": "line", "points": seg_value(s)}),
        Shape::Circle { center, radius } => {
            json!({"type": "circle", "center": center, "radius": real_value(*radius)})
        }
        Shape::Polygon(p) => json!({"type": "polygon", "points": p}),
    };
    if let Some(origin) = &o.origin {
        let ov = match origin {
            Origin::Drawn => json!({"kind": "drawn"}),
            Origin::Image { of, transform } => {
                json!({"kind": "image", "of": of, "transform": transform_to_value(transform)})
            }
        };
        v["origin"] = ov;
    }
    v
}

fn relation_to_value(r: &Relation) -> Value {
    let args: Vec<Value> = match r {
        Relation::PointOnLine { point, line } => vec![json!(point), seg_value(line)],
        Relation::PointOnCircle { point, center } => vec![json!(point), json!(center)],
        Relation::Perpendicular(a, b) | Relation::Parallel(a, b) | Relation::EqualLength(a, b) => {
            vec![seg_value(a), seg_value(b)]
        }
        Relation::FixedLength(s, _) => vec![seg_value(s)],
        Relation::FixedAngle(p, _) | Relation::Collinear(p) => p.iter().map(|l| json!(l)).collect(),
        Relation::Midpoint { point, segment } => vec![json!(point), seg_value(segment)],
    };
    let mut v = json!({"kind": r.kind().as_str(), "args": args});
    if let Some(val) = r.value() {
        v["value"] = real_value(val);
    }
    v
}

/// Canonical text: sorted keys, points by name, reals per [`crate::canonical::fmt_real`].
pub fn serialize_logic_form(lf: &LogicForm) -> String {
    let mut sorted = lf.clone();
    sorted.points.sort_by(|a, b| a.name.cmp(&b.name));
    canonical::to_string(&sorted.to_value())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dangling label `{0}`")]
    DanglingLabel(String),
    #[error("invalid logic form: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    points: Vec<RawPoint>,
    objects: Vec<Value>,
    relations: Vec<Value>,
    #[serde(default)]
    annotations: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    name: String,
    x: f64,
    y: f64,
    #[serde(default)]
    auxiliary: bool,
}

/// Byte offset of a 1-based (line, column) position.
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

pub(crate) fn classify_json_error(text: &str, e: &serde_json::Error) -> ParseError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => ParseError::Syntax {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        },
        Category::Data => ParseError::Schema(e.to_string()),
    }
}

pub fn parse_logic_form(text: &str) -> Result<LogicForm, ParseError> {
    let raw: RawForm = serde_json::from_str(text).map_err(|e| classify_json_error(text, &e))?;
    let lf = form_from_raw(raw)?;
    let violations = validate(&lf);
    if let Some(Violation::DanglingLabel(l)) = violations
        .iter()
        .find(|v| matches!(v, Violation::DanglingLabel(_)))
    {
        return Err(ParseError::DanglingLabel(l.clone()));
    }
    if !violations.is_empty() {
        return Err(ParseError::Invalid(violations));
    }
    Ok(lf)
}

/// Parse from an already-decoded JSON value (problem files embed forms inline).
pub fn logic_form_from_value(value: &Value) -> Result<LogicForm, ParseError> {
    parse_logic_form(&value.to_string())
}

fn form_from_raw(raw: RawForm) -> Result<LogicForm, ParseError> {
    let mut lf = LogicForm::new();
    for p in raw.points {
        lf.insert_point(PointDecl {
            name: p.name,
            x: p.x,
            y: p.y,
            auxiliary: p.auxiliary,
        });
    }
    lf.objects = raw
        .objects
        .iter()
        .map(object_from_value)
        .collect::<Result<_, _>>()?;
    lf.relations = raw
        .relations
        .iter()
        .map(relation_from_value)
        .collect::<Result<_, _>>()?;
    lf.annotations = raw.annotations;
    Ok(lf)
}

fn schema(msg: impl Into<String>) -> ParseError {
    ParseError::Schema(msg.into())
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, ParseError> {
    v.as_object()
        .ok_or_else(|| schema(format!("{what} must be an object")))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<(), ParseError> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(schema(format!("unknown key `{k}` in {what}")));
        }
    }
    Ok(())
}

fn get<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value, ParseError> {
    m.get(key)
        .ok_or_else(|| schema(format!("{what} is missing `{key}`")))
}

fn label_of(v: &Value, what: &str) -> Result<String, ParseError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(format!("{what} must be a point label")))
}

fn labels_of(v: &Value, what: &str) -> Result<Vec<String>, ParseError> {
    v.as_array()
        .ok_or_else(|| schema(format!("{what} must be an array of labels")))?
        .iter()
        .map(|l| label_of(l, what))
        .collect()
}

fn seg_of(v: &Value, what: &str) -> Result<Seg, ParseError> {
    let l = labels_of(v, what)?;
    <[String; 2]>::try_from(l).map_err(|_| schema(format!("{what} must name exactly two points")))
}

fn real_of(v: &Value, what: &str) -> Result<f64, ParseError> {
    v.as_f64()
        .ok_or_else(|| schema(format!("{what} must be a number")))
}

fn object_from_value(v: &Value) -> Result<ObjectDecl, ParseError> {
    let m = as_object(v, "object")?;
    let ty = get(m, "type", "object")?
        .as_str()
        .ok_or_else(|| schema("object `type` must be a string"))?;
    let shape = match ty {
        "line" => {
            check_keys(m, &["type", "points", "origin"], "line")?;
            Shape::Line(seg_of(get(m, "points", "line")?, "line points")?)
        }
        "circle" => {
            check_keys(m, &["type", "center", "radius", "origin"], "circle")?;
            Shape::Circle {
                center: label_of(get(m, "center", "circle")?, "circle center")?,
                radius: real_of(get(m, "radius", "circle")?, "circle radius")?,
            }
        }
        "polygon" => {
            check_keys(m, &["type", "points", "origin"], "polygon")?;
            let pts = labels_of(get(m, "points", "polygon")?, "polygon points")?;
            if pts.len() < 3 {
                return Err(schema("polygon needs at least three points"));
            }
            Shape::Polygon(pts)
        }
        other => return Err(schema(format!("unknown object type `{other}`"))),
    };
    let origin = m.get("origin").map(origin_from_value).transpose()?;
    Ok(ObjectDecl { shape, origin })
}

fn origin_from_value(v: &Value) -> Result<Origin, ParseError> {
    let m = as_object(v, "origin")?;
    match get(m, "kind", "origin")?.as_str() {
        Some("drawn") => {
            check_keys(m, &["kind"], "origin")?;
            Ok(Origin::Drawn)
        }
        Some("image") => {
            check_keys(m, &["kind", "of", "transform"], "origin")?;
            let of = labels_of(get(m, "of", "origin")?, "origin.of")?;
            let t = as_object(get(m, "transform", "origin")?, "transform")?;
            let transform = match get(t, "op", "transform")?.as_str() {
                Some("reflect") => {
                    check_keys(t, &["op", "axis"], "transform")?;
                    Transform::Reflect {
                        axis: seg_of(get(t, "axis", "transform")?, "axis")?,
                    }
                }
                Some("rotate") => {
                    check_keys(t, &["op", "center", "degrees"], "transform")?;
                    Transform::Rotate {
                        center: label_of(get(t, "center", "transform")?, "center")?,
                        degrees: real_of(get(t, "degrees", "transform")?, "degrees")?,
                    }
                }
                Some("translate") => {
                    check_keys(t, &["op", "vector"], "transform")?;
                    let vec = get(t, "vector", "transform")?
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| schema("vector must be [dx, dy]"))?;
                    Transform::Translate {
                        vector: Vec2::new(real_of(&vec[0], "dx")?, real_of(&vec[1], "dy")?),
                    }
                }
                _ => return Err(schema("unknown transform op")),
            };
            Ok(Origin::Image { of, transform })
        }
        _ => Err(schema("origin kind must be `drawn` or `image`")),
    }
}

fn relation_from_value(v: &Value) -> Result<Relation, ParseError> {
    let m = as_object(v, "relation")?;
    check_keys(m, &["kind", "args", "value"], "relation")?;
    let kind_str = get(m, "kind", "relation")?
        .as_str()
        .ok_or_else(|| schema("relation kind must be a string"))?;
    let kind = RelationKind::parse(kind_str)
        .ok_or_else(|| schema(format!("unknown relation kind `{kind_str}`")))?;
    let args = get(m, "args", "relation")?
        .as_array()
        .ok_or_else(|| schema("relation args must be an array"))?;
    let value = m.get("value");
    let needs_value = matches!(kind, RelationKind::FixedLength | RelationKind::FixedAngle);
    if needs_value != value.is_some() {
        return Err(schema(format!(
            "{kind_str}: `value` is {}",
            if needs_value { "required" } else { "not allowed" }
        )));
    }
    let arity = match kind {
        RelationKind::FixedLength => 1,
        RelationKind::FixedAngle | RelationKind::Collinear => 3,
        _ => 2,
    };
    if args.len() != arity {
        return Err(schema(format!(
            "{kind_str} takes {arity} arguments, got {}",
            args.len()
        )));
    }
    let point = |i: usize| label_of(&args[i], kind_str);
    let line = |i: usize| seg_of(&args[i], kind_str);
    let triple = || -> Result<[String; 3], ParseError> { Ok([point(0)?, point(1)?, point(2)?]) };
    Ok(match kind {
        RelationKind::PointOnLine => Relation::PointOnLine {
            point: point(0)?,
            line: line(1)?,
        },
        RelationKind::PointOnCircle => Relation::PointOnCircle {
            point: point(0)?,
            center: point(1)?,
        },
        RelationKind::Perpendicular => Relation::Perpendicular(line(0)?, line(1)?),
        RelationKind::Parallel => Relation::Parallel(line(0)?, line(1)?),
        RelationKind::EqualLength => Relation::EqualLength(line(0)?, line(1)?),
        RelationKind::FixedLength => {
            Relation::FixedLength(line(0)?, real_of(value.unwrap(), "value")?)
        }
        RelationKind::FixedAngle => Relation::FixedAngle(triple()?, real_of(value.unwrap(), "value")?),
        RelationKind::Collinear => Relation::Collinear(triple()?),
        RelationKind::Midpoint => Relation::Midpoint {
            point: point(0)?,
            segment: line(1)?,
        },
    })
}

/// One broken invariant, naming the offending declaration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
    #[error("malformed point label `{0}`")]
    InvalidLabel(String),
    #[error("point `{0}` has a non-finite coordinate")]
    NonFiniteCoordinate(String),
    #[error("unresolved label `{0}`")]
    DanglingLabel(String),
    #[error("circle `{0}` has a non-positive radius")]
    NonPositiveRadius(String),
    #[error("degenerate object `{0}`")]
    DegenerateObject(String),
    #[error("duplicate object `{0}`")]
    DuplicateObject(String),
    #[error("malformed relation `{0}`")]
    BadRelation(String),
    #[error("no circle centered at `{0}`")]
    MissingCircle(String),
    #[error("several circles centered at `{0}`")]
    AmbiguousCircle(String),
    #[error("inconsistent image origin on `{0}`")]
    BadOrigin(String),
}

/// Every invariant violation in `lf`; empty iff the form is valid.
pub fn validate(lf: &LogicForm) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for p in &lf.points {
        if !names.insert(p.name.as_str()) {
            out.push(Violation::DuplicateLabel(p.name.clone()));
        }
        if !is_valid_label(&p.name) {
            out.push(Violation::InvalidLabel(p.name.clone()));
        }
        if !p.pos().is_finite() {
            out.push(Violation::NonFiniteCoordinate(p.name.clone()));
        }
    }
    let mut dangling = BTreeSet::new();
    let check = |l: &str, dangling: &mut BTreeSet<String>| {
        if !names.contains(l) {
            dangling.insert(l.to_string());
        }
    };

    let mut seen_objects = HashSet::new();
    let mut circle_centers: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &lf.objects {
        for l in o.labels() {
            check(l, &mut dangling);
        }
        match &o.shape {
            Shape::Line([a, b]) if a == b => {
                out.push(Violation::DegenerateObject(o.to_string()));
            }
            Shape::Circle { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    out.push(Violation::NonPositiveRadius(center.clone()));
                }
                *circle_centers.entry(center).or_default() += 1;
            }
            Shape::Polygon(pts) => {
                let distinct: HashSet<_> = pts.iter().collect();
                if pts.len() < 3 || distinct.len() != pts.len() {
                    out.push(Violation::DegenerateObject(o.to_string()));
                }
            }
            _ => {}
        }
        if !seen_objects.insert(o.identity()) {
            out.push(Violation::DuplicateObject(o.to_string()));
        }
        if let Some(Origin::Image { of, transform }) = &o.origin {
            for l in of {
                check(l, &mut dangling);
            }
            match transform {
                Transform::Reflect { axis } => axis.iter().for_each(|l| check(l, &mut dangling)),
                Transform::Rotate { center, degrees } => {
                    check(center, &mut dangling);
                    if !degrees.is_finite() {
                        out.push(Violation::BadOrigin(o.to_string()));
                    }
                }
                Transform::Translate { vector } => {
                    if !vector.is_finite() {
                        out.push(Violation::BadOrigin(o.to_string()));
                    }
                }
            }
            if of.len() != o.labels().len() {
                out.push(Violation::BadOrigin(o.to_string()));
            }
        }
    }

    for r in &lf.relations {
        for l in r.labels() {
            check(l, &mut dangling);
        }
        let bad_seg = |s: &Seg| s[0] == s[1];
        let malformed = match r {
            Relation::PointOnLine { line, .. } | Relation::Midpoint { segment: line, .. } => {
                bad_seg(line)
            }
            Relation::Perpendicular(a, b) | Relation::Parallel(a, b) | Relation::EqualLength(a, b) => {
                bad_seg(a) || bad_seg(b)
            }
            Relation::FixedLength(s, v) => bad_seg(s) || !v.is_finite() || *v < 0.0,
            Relation::FixedAngle(p, v) => {
                p[0] == p[1] || p[2] == p[1] || !v.is_finite() || !(0.0..=180.0).contains(v)
            }
            Relation::Collinear(_) => false,
            Relation::PointOnCircle { center, .. } => {
                match circle_centers.get(center.as_str()) {
                    None => out.push(Violation::MissingCircle(center.clone())),
                    Some(n) if *n > 1 => out.push(Violation::AmbiguousCircle(center.clone())),
                    _ => {}
                }
                false
            }
        };
        if malformed {
            out.push(Violation::BadRelation(r.to_string()));
        }
    }

    for key in lf.annotations.keys() {
        if key != GOAL_ANNOTATION {
            check(key, &mut dangling);
        }
    }
    out.extend(dangling.into_iter().map(Violation::DanglingLabel));
    out
}

/// Differences between two forms. Missing means present in the first form
/// only; extra means present in the second only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagramDiff {
    pub missing_points: Vec<String>,
    pub extra_points: Vec<String>,
    pub moved_points: Vec<(String, f64)>,
    pub missing_objects: Vec<ObjectDecl>,
    pub extra_objects: Vec<ObjectDecl>,
}

impl DiagramDiff {
    pub fn is_empty(&self) -> bool {
        self.missing_points.is_empty()
            && self.extra_points.is_empty()
            && self.moved_points.is_empty()
            && self.missing_objects.is_empty()
            && self.extra_objects.is_empty()
    }
}

fn same_object(a: &ObjectDecl, b: &ObjectDecl, eps: f64) -> bool {
    if a.identity() != b.identity() {
        return false;
    }
    match (&a.shape, &b.shape) {
        (Shape::Circle { radius: r1, .. }, Shape::Circle { radius: r2, .. }) => {
            (r1 - r2).abs() <= eps
        }
        _ => true,
    }
}

fn unmatched(from: &[ObjectDecl], against: &[ObjectDecl], eps: f64) -> Vec<ObjectDecl> {
    let mut used = vec![false; against.len()];
    let mut out = Vec::new();
    for o in from {
        match (0..against.len()).find(|&j| !used[j] && same_object(o, &against[j], eps)) {
            Some(j) => used[j] = true,
            None => out.push(o.clone()),
        }
    }
    out
}

pub fn diff_forms(a: &LogicForm, b: &LogicForm, eps: f64) -> DiagramDiff {
    let names_a: BTreeSet<&str> = a.points.iter().map(|p| p.name.as_str()).collect();
    let names_b: BTreeSet<&str> = b.points.iter().map(|p| p.name.as_str()).collect();
    let moved = names_a
        .intersection(&names_b)
        .filter_map(|n| {
            let d = a.pos(n)?.distance(b.pos(n)?);
            (d > eps).then(|| (n.to_string(), d))
        })
        .collect();
    DiagramDiff {
        missing_points: names_a.difference(&names_b).map(|s| s.to_string()).collect(),
        extra_points: names_b.difference(&names_a).map(|s| s.to_string()).collect(),
        moved_points: moved,
        missing_objects: unmatched(&a.objects, &b.objects, eps),
        extra_objects: unmatched(&b.objects, &a.objects, eps),
    }
}
