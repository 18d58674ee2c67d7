//! Sketch actions and the executor that applies them to a logic form.
//!
//! Transform actions never move the original object: the image is added as
//! a new object whose moved points get fresh primed labels (`A` → `A'`, or
//! `A''` when `A'` is taken). Labels that are fixed by construction (the
//! rotation center, the reflection axis endpoints) are reused.

use std::collections::HashSet;
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::answer::AnswerValue;
use crate::canonical::{self, real_value};
use crate::geom::{self, GeomError, Vec2};
use crate::logic_form::{
    is_valid_label, LogicForm, ObjectDecl, ObjectRefError, Origin, PointDecl, Seg, Shape,
    Transform,
};

/// Radius within which `label_point` snaps onto an existing point or crossing.
pub const SNAP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    DrawLine { from: String, to: String },
    Reflect { object: String, axis: Seg },
    Rotate { object: String, center: String, degrees: f64 },
    Translate { object: String, vector: Vec2 },
    LabelPoint { name: String, coordinates: Vec2 },
    Answer(AnswerValue),
}

impl Action {
    pub fn op(&self) -> &'static str {
        match self {
            Action::DrawLine { .. } => "draw_line",
            Action::Reflect { .. } => "reflect",
            Action::Rotate { .. } => "rotate",
            Action::Translate { .. } => "translate",
            Action::LabelPoint { .. } => "label_point",
            Action::Answer(_) => "answer",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Action::Answer(_))
    }

    pub fn to_value(&self) -> Value {
        match self {
            Action::DrawLine { from, to } => json!({"op": "draw_line", "from": from, "to": to}),
            Action::Reflect { object, axis } => {
                json!({"op": "reflect", "object": object, "axis": [axis[0], axis[1]]})
            }
            Action::Rotate {
                object,
                center,
                degrees,
            } => json!({"op": "rotate", "object": object, "center": center, "degrees": real_value(*degrees)}),
            Action::Translate { object, vector } => json!({
                "op": "translate",
                "object": object,
                "vector": [real_value(vector.x), real_value(vector.y)],
            }),
            Action::LabelPoint { name, coordinates } => json!({
                "op": "label_point",
                "name": name,
                "coordinates": [real_value(coordinates.x), real_value(coordinates.y)],
            }),
            Action::Answer(a) => {
                let (value, unit) = a.to_json();
                let mut m = Map::new();
                m.insert("op".into(), Value::from("answer"));
                m.insert("value".into(), value);
                if let Some(u) = unit {
                    m.insert("unit".into(), Value::from(u));
                }
                Value::Object(m)
            }
        }
    }

    pub fn to_canonical_string(&self) -> String {
        canonical::to_string(&self.to_value())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

/// Why an action document was rejected. Any such rejection scores as a
/// format failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid action: {reason}")]
pub struct ActionSchemaError {
    pub reason: String,
}

fn bad(reason: impl Into<String>) -> ActionSchemaError {
    ActionSchemaError {
        reason: reason.into(),
    }
}

pub fn parse_action(text: &str) -> Result<Action, ActionSchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
    action_from_value(&v)
}

pub fn action_from_value(v: &Value) -> Result<Action, ActionSchemaError> {
    let m = v.as_object().ok_or_else(|| bad("action must be an object"))?;
    let op = m
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing string field `op`"))?;
    let expect = |keys: &[&str]| -> Result<(), ActionSchemaError> {
        for k in m.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(bad(format!("unexpected field `{k}` for {op}")));
            }
        }
        for k in keys {
            if !m.contains_key(*k) && *k != "unit" {
                return Err(bad(format!("missing field `{k}` for {op}")));
            }
        }
        Ok(())
    };
    let label = |k: &str| -> Result<String, ActionSchemaError> {
        let s = m
            .get(k)
            .and_then(Value::as_str)
            .ok_or_else(|| bad(format!("`{k}` must be a string")))?;
        if !is_valid_label(s) {
            return Err(bad(format!("`{k}` is not a valid label: `{s}`")));
        }
        Ok(s.to_string())
    };
    let text = |k: &str| -> Result<String, ActionSchemaError> {
        m.get(k)
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .ok_or_else(|| bad(format!("`{k}` must be a nonempty string")))
    };
    let number = |v: &Value, k: &str| -> Result<f64, ActionSchemaError> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(format!("`{k}` must be a finite number")))
    };
    let pair = |k: &str| -> Result<Vec2, ActionSchemaError> {
        let arr = m
            .get(k)
            .and_then(Value::as_array)
            .filter(|a| a.len() == 2)
            .ok_or_else(|| bad(format!("`{k}` must be a two-element array")))?;
        Ok(Vec2::new(number(&arr[0], k)?, number(&arr[1], k)?))
    };

    match op {
        "draw_line" => {
            expect(&["op", "from", "to"])?;
            Ok(Action::DrawLine {
                from: label("from")?,
                to: label("to")?,
            })
        }
        "reflect" => {
            expect(&["op", "object", "axis"])?;
            let axis = m
                .get("axis")
                .and_then(Value::as_array)
                .filter(|a| a.len() == 2)
                .ok_or_else(|| bad("`axis` must name two points"))?;
            let mut labels = Vec::with_capacity(2);
            for l in axis {
                match l.as_str() {
                    Some(s) if is_valid_label(s) => labels.push(s.to_string()),
                    _ => return Err(bad("`axis` entries must be point labels")),
                }
            }
            Ok(Action::Reflect {
                object: text("object")?,
                axis: [labels[0].clone(), labels[1].clone()],
            })
        }
        "rotate" => {
            expect(&["op", "object", "center", "degrees"])?;
            Ok(Action::Rotate {
                object: text("object")?,
                center: label("center")?,
                degrees: number(&m["degrees"], "degrees")?,
            })
        }
        "translate" => {
            expect(&["op", "object", "vector"])?;
            Ok(Action::Translate {
                object: text("object")?,
                vector: pair("vector")?,
            })
        }
        "label_point" => {
            expect(&["op", "name", "coordinates"])?;
            Ok(Action::LabelPoint {
                name: label("name")?,
                coordinates: pair("coordinates")?,
            })
        }
        "answer" => {
            expect(&["op", "value", "unit"])?;
            let unit = match m.get("unit") {
                None => None,
                Some(Value::String(u)) => Some(u.as_str()),
                Some(_) => return Err(bad("`unit` must be a string")),
            };
            let value = AnswerValue::from_json(&m["value"], unit)
                .map_err(|e| bad(format!("bad answer value: {e}")))?;
            Ok(Action::Answer(value))
        }
        other => Err(bad(format!("unknown op `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("ambiguous object reference `{0}`")]
    AmbiguousObject(String),
    #[error("reflection axis points coincide")]
    DegenerateAxis,
    #[error("cannot draw a line between coincident points `{0}` and `{1}`")]
    DegenerateLine(String, String),
    #[error("label `{0}` already names a point at a different location")]
    NameCollision(String),
}

impl From<ObjectRefError> for ExecError {
    fn from(e: ObjectRefError) -> Self {
        match e {
            ObjectRefError::Unknown(s) => ExecError::UnknownObject(s),
            ObjectRefError::Ambiguous(s) => ExecError::AmbiguousObject(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Created {
    Point(String),
    /// Index into `next_form.objects`.
    Object(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    pub next_form: LogicForm,
    pub created: Vec<Created>,
    pub terminal: bool,
    pub answer: Option<AnswerValue>,
}

impl ExecutionResult {
    fn unchanged(lf: &LogicForm) -> Self {
        Self {
            next_form: lf.clone(),
            created: Vec::new(),
            terminal: false,
            answer: None,
        }
    }
}

fn pos(lf: &LogicForm, label: &str) -> Result<Vec2, ExecError> {
    lf.pos(label)
        .ok_or_else(|| ExecError::UnknownLabel(label.to_string()))
}

/// Apply `action` to `lf`, returning the successor form. `lf` is untouched.
pub fn execute(lf: &LogicForm, action: &Action) -> Result<ExecutionResult, ExecError> {
    match action {
        Action::DrawLine { from, to } => {
            let p = pos(lf, from)?;
            let q = pos(lf, to)?;
            if from == to || p.distance(q) <= geom::DEGENERATE_EPS {
                return Err(ExecError::DegenerateLine(from.clone(), to.clone()));
            }
            if lf.has_line(from, to) {
                return Ok(ExecutionResult::unchanged(lf));
            }
            let mut next = lf.clone();
            next.objects.push(ObjectDecl {
                shape: Shape::Line([from.clone(), to.clone()]),
                origin: Some(Origin::Drawn),
            });
            Ok(ExecutionResult {
                created: vec![Created::Object(next.objects.len() - 1)],
                next_form: next,
                terminal: false,
                answer: None,
            })
        }
        Action::Reflect { object, axis } => {
            let p = pos(lf, &axis[0])?;
            let q = pos(lf, &axis[1])?;
            let map = geom::reflection_map(p, q).map_err(|e| match e {
                GeomError::DegenerateAxis => ExecError::DegenerateAxis,
                _ => ExecError::DegenerateAxis,
            })?;
            let fixed: HashSet<&str> = axis.iter().map(String::as_str).collect();
            transform_copy(
                lf,
                object,
                &map,
                &fixed,
                Transform::Reflect { axis: axis.clone() },
            )
        }
        Action::Rotate {
            object,
            center,
            degrees,
        } => {
            let c = pos(lf, center)?;
            let map = geom::rotation_map(c, *degrees);
            let fixed: HashSet<&str> = [center.as_str()].into_iter().collect();
            transform_copy(
                lf,
                object,
                &map,
                &fixed,
                Transform::Rotate {
                    center: center.clone(),
                    degrees: *degrees,
                },
            )
        }
        Action::Translate { object, vector } => {
            let map = geom::translation_map(*vector);
            transform_copy(
                lf,
                object,
                &map,
                &HashSet::new(),
                Transform::Translate { vector: *vector },
            )
        }
        Action::LabelPoint { name, coordinates } => label_point(lf, name, *coordinates),
        Action::Answer(a) => Ok(ExecutionResult {
            next_form: lf.clone(),
            created: Vec::new(),
            terminal: true,
            answer: Some(a.clone()),
        }),
    }
}

/// `base` with enough primes appended to be unused in `lf` and `taken`.
pub fn fresh_prime(lf: &LogicForm, base: &str, taken: &HashSet<String>) -> String {
    let mut name = format!("{base}'");
    while lf.has_point(&name) || taken.contains(&name) {
        name.push('\'');
    }
    name
}

fn transform_copy(
    lf: &LogicForm,
    object: &str,
    map: &geom::AffineMap,
    fixed: &HashSet<&str>,
    transform: Transform,
) -> Result<ExecutionResult, ExecError> {
    let idx = lf.resolve_object(object)?;
    let source = &lf.objects[idx];
    let labels: Vec<String> = source.labels().iter().map(|s| s.to_string()).collect();

    let mut next = lf.clone();
    let mut created = Vec::new();
    let mut taken = HashSet::new();
    let mut image_labels = Vec::with_capacity(labels.len());
    for l in &labels {
        if fixed.contains(l.as_str()) {
            image_labels.push(l.clone());
            continue;
        }
        let p = pos(lf, l)?;
        let name = fresh_prime(lf, l, &taken);
        taken.insert(name.clone());
        let q = map.apply(p);
        next.insert_point(PointDecl {
            name: name.clone(),
            x: q.x,
            y: q.y,
            auxiliary: true,
        });
        created.push(Created::Point(name.clone()));
        image_labels.push(name);
    }
    if image_labels == labels {
        // every point is fixed: the image is the object itself
        return Ok(ExecutionResult::unchanged(lf));
    }
    let shape = match &source.shape {
        Shape::Line(_) => Shape::Line([image_labels[0].clone(), image_labels[1].clone()]),
        Shape::Circle { radius, .. } => Shape::Circle {
            center: image_labels[0].clone(),
            radius: *radius,
        },
        Shape::Polygon(_) => Shape::Polygon(image_labels),
    };
    next.objects.push(ObjectDecl {
        shape,
        origin: Some(Origin::Image {
            of: labels,
            transform,
        }),
    });
    created.push(Created::Object(next.objects.len() - 1));
    Ok(ExecutionResult {
        next_form: next,
        created,
        terminal: false,
        answer: None,
    })
}

fn label_point(lf: &LogicForm, name: &str, at: Vec2) -> Result<ExecutionResult, ExecError> {
    if let Some(existing) = lf.point(name) {
        if existing.pos().distance(at) <= SNAP_EPS {
            return Ok(ExecutionResult::unchanged(lf));
        }
        return Err(ExecError::NameCollision(name.to_string()));
    }
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |p: Vec2| {
        let d = p.distance(at);
        if d <= SNAP_EPS && best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, p));
        }
    };
    lf.points.iter().for_each(|p| consider(p.pos()));
    for i in 0..lf.objects.len() {
        for j in (i + 1)..lf.objects.len() {
            for c in crossings(lf, i, j) {
                consider(c);
            }
        }
    }
    let snapped = best.map_or(at, |(_, p)| p);
    let mut next = lf.clone();
    next.insert_point(PointDecl {
        name: name.to_string(),
        x: snapped.x,
        y: snapped.y,
        auxiliary: true,
    });
    Ok(ExecutionResult {
        next_form: next,
        created: vec![Created::Point(name.to_string())],
        terminal: false,
        answer: None,
    })
}

enum Piece {
    Seg(Vec2, Vec2),
    Circle(Vec2, f64),
}

fn pieces(lf: &LogicForm, obj: &ObjectDecl) -> Vec<Piece> {
    match &obj.shape {
        Shape::Circle { center, radius } => lf
            .pos(center)
            .map(|c| vec![Piece::Circle(c, *radius)])
            .unwrap_or_default(),
        _ => obj
            .segments()
            .into_iter()
            .filter_map(|(a, b)| {
                let (p, q) = (lf.pos(a)?, lf.pos(b)?);
                (p.distance(q) > geom::DEGENERATE_EPS).then_some(Piece::Seg(p, q))
            })
            .collect(),
    }
}

fn on_seg(p: Vec2, a: Vec2, b: Vec2) -> bool {
    let t = geom::segment_param((a, b), p);
    (-geom::SEGMENT_PARAM_EPS..=1.0 + geom::SEGMENT_PARAM_EPS).contains(&t)
}

/// Raw crossing points between objects `i` and `j` (segments are finite).
fn crossings(lf: &LogicForm, i: usize, j: usize) -> Vec<Vec2> {
    let mut out = Vec::new();
    for a in pieces(lf, &lf.objects[i]) {
        for b in pieces(lf, &lf.objects[j]) {
            match (&a, &b) {
                (Piece::Seg(p, q), Piece::Seg(r, s)) => {
                    if let Ok(Some(hit)) = geom::intersect_lines((*p, *q), (*r, *s)) {
                        if hit.within_both() {
                            out.push(hit.point);
                        }
                    }
                }
                (Piece::Seg(p, q), Piece::Circle(c, r)) | (Piece::Circle(c, r), Piece::Seg(p, q)) => {
                    if let Ok(hits) = geom::intersect_line_circle((*p, *q), *c, *r) {
                        out.extend(hits.into_iter().filter(|h| on_seg(*h, *p, *q)));
                    }
                }
                (Piece::Circle(c1, r1), Piece::Circle(c2, r2)) => {
                    out.extend(geom::intersect_circles(*c1, *r1, *c2, *r2));
                }
            }
        }
    }
    out
}

/// An unnamed crossing of a new object with an earlier one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: Vec2,
    /// `(new_object, other_object)` indices into `lf.objects`.
    pub objects: (usize, usize),
}

/// Crossings between `lf.objects[new_object]` and every other object that do
/// not already carry a label. Points closer than [`SNAP_EPS`] are merged.
pub fn auto_intersections(lf: &LogicForm, new_object: usize) -> Vec<Crossing> {
    let mut out: Vec<Crossing> = Vec::new();
    for other in 0..lf.objects.len() {
        if other == new_object {
            continue;
        }
        for p in crossings(lf, new_object, other) {
            let labeled = lf.points.iter().any(|q| q.pos().distance(p) <= SNAP_EPS);
            let dup = out.iter().any(|c| c.point.distance(p) <= SNAP_EPS);
            if !labeled && !dup {
                out.push(Crossing {
                    point: p,
                    objects: (new_object, other),
                });
            }
        }
    }
    out
}
