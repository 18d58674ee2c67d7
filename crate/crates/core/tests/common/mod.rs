//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sketchproof::action::Action;
use sketchproof::logic_form::{seg, validate, LogicForm, ObjectDecl, Relation, Shape};
use sketchproof::Vec2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let c = (b'A' + (i % 26) as u8) as char;
            if i < 26 {
                c.to_string()
            } else {
                format!("{c}{}", i / 26)
            }
        })
        .collect()
}

fn pick2<'a>(rng: &mut ChaCha8Rng, names: &'a [String]) -> [&'a str; 2] {
    let mut v: Vec<&str> = names.choose_multiple(rng, 2).map(String::as_str).collect();
    v.shuffle(rng);
    [v[0], v[1]]
}

fn pick3<'a>(rng: &mut ChaCha8Rng, names: &'a [String]) -> [&'a str; 3] {
    let v: Vec<&str> = names.choose_multiple(rng, 3).map(String::as_str).collect();
    [v[0], v[1], v[2]]
}

pub fn random_relation(rng: &mut ChaCha8Rng, names: &[String], circle: Option<&str>) -> Relation {
    let s = |p: [&str; 2]| seg(p[0], p[1]);
    let strings = |p: [&str; 3]| p.map(String::from);
    loop {
        return match rng.gen_range(0..9) {
            0 => {
                let [p, a, b] = pick3(rng, names);
                Relation::PointOnLine { point: p.into(), line: seg(a, b) }
            }
            1 => match circle {
                Some(c) => {
                    let others: Vec<String> = names.iter().filter(|n| *n != c).cloned().collect();
                    Relation::PointOnCircle { point: others.choose(rng).unwrap().clone(), center: c.into() }
                }
                None => continue,
            },
            2 => Relation::Perpendicular(s(pick2(rng, names)), s(pick2(rng, names))),
            3 => Relation::Parallel(s(pick2(rng, names)), s(pick2(rng, names))),
            4 => Relation::EqualLength(s(pick2(rng, names)), s(pick2(rng, names))),
            5 => Relation::FixedLength(s(pick2(rng, names)), rng.gen_range(0.5..5.0)),
            6 => Relation::FixedAngle(strings(pick3(rng, names)), rng.gen_range(10.0..170.0)),
            7 => Relation::Collinear(strings(pick3(rng, names))),
            _ => {
                let [p, a, b] = pick3(rng, names);
                Relation::Midpoint { point: p.into(), segment: seg(a, b) }
            }
        };
    }
}

/// A valid form with `n` points in `[-scale, scale]²`, a few objects and
/// `relations` random relations.
pub fn random_form(rng: &mut ChaCha8Rng, n: usize, scale: f64, relations: usize) -> LogicForm {
    let names = names(n);
    let mut lf = LogicForm::new();
    for name in &names {
        lf = lf.with_point(name, rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    }
    let mut circle = None;
    if rng.gen_bool(0.5) {
        let c = names.choose(rng).unwrap().clone();
        lf = lf.with_object(ObjectDecl::circle(&c, rng.gen_range(0.5..scale.max(1.0))));
        circle = Some(c);
    }
    for _ in 0..if n >= 2 { rng.gen_range(0..4) } else { 0 } {
        let [a, b] = pick2(rng, &names);
        if !lf.has_line(a, b) {
            lf = lf.with_line(a, b);
        }
    }
    if n >= 3 && rng.gen_bool(0.5) {
        let t = pick3(rng, &names);
        lf = lf.with_object(ObjectDecl::polygon(&t));
    }
    for _ in 0..relations {
        lf = lf.with_relation(random_relation(rng, &names, circle.as_deref()));
    }
    assert!(validate(&lf).is_empty(), "generator produced an invalid form: {:?}", validate(&lf));
    lf
}

/// Move every point by up to `amount` in each coordinate.
pub fn perturb(lf: &LogicForm, rng: &mut ChaCha8Rng, amount: f64) -> LogicForm {
    let mut out = lf.clone();
    for p in &mut out.points {
        p.x += rng.gen_range(-amount..=amount);
        p.y += rng.gen_range(-amount..=amount);
    }
    out
}

/// A plausible next action for `lf`; it may still fail to execute.
pub fn random_action(rng: &mut ChaCha8Rng, lf: &LogicForm, fresh: usize) -> Action {
    let names: Vec<String> = lf.points.iter().map(|p| p.name.clone()).collect();
    let object = |rng: &mut ChaCha8Rng| lf.objects.choose(rng).map(|o| o.reference());
    let v = |rng: &mut ChaCha8Rng| Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    match rng.gen_range(0..5) {
        0 | 1 if names.len() >= 2 => {
            let [a, b] = pick2(rng, &names);
            Action::DrawLine { from: a.into(), to: b.into() }
        }
        2 if names.len() >= 2 && !lf.objects.is_empty() => {
            let [a, b] = pick2(rng, &names);
            Action::Reflect { object: object(rng).unwrap(), axis: [a.into(), b.into()] }
        }
        3 if !lf.objects.is_empty() => Action::Rotate {
            object: object(rng).unwrap(),
            center: names.choose(rng).unwrap().clone(),
            degrees: rng.gen_range(-360.0..360.0),
        },
        4 if !lf.objects.is_empty() => Action::Translate { object: object(rng).unwrap(), vector: v(rng) },
        _ => Action::LabelPoint { name: format!("Q{fresh}"), coordinates: v(rng) },
    }
}

fn at(lf: &LogicForm, l: &str) -> (f64, f64) {
    let p = lf.point(l).expect("label resolves");
    (p.x, p.y)
}

fn unit(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let n = dx.hypot(dy);
    (dx / n, dy / n)
}

/// Residuals recomputed from scratch, independently of the solver.
pub fn oracle_residuals(lf: &LogicForm) -> Vec<f64> {
    let mut out = Vec::new();
    for r in &lf.relations {
        match r {
            Relation::PointOnLine { point, line } => {
                let (a, b, p) = (at(lf, &line[0]), at(lf, &line[1]), at(lf, point));
                let u = unit(a, b);
                out.push(u.0 * (p.1 - a.1) - u.1 * (p.0 - a.0));
            }
            Relation::PointOnCircle { point, center } => {
                let radius = lf
                    .objects
                    .iter()
                    .find_map(|o| match &o.shape {
                        Shape::Circle { center: c, radius } if c == center => Some(*radius),
                        _ => None,
                    })
                    .expect("circle declared");
                let (p, o) = (at(lf, point), at(lf, center));
                out.push((p.0 - o.0).hypot(p.1 - o.1) - radius);
            }
            Relation::Perpendicular(s, t) | Relation::Parallel(s, t) => {
                let u = unit(at(lf, &s[0]), at(lf, &s[1]));
                let w = unit(at(lf, &t[0]), at(lf, &t[1]));
                out.push(match r {
                    Relation::Perpendicular(..) => u.0 * w.0 + u.1 * w.1,
                    _ => u.0 * w.1 - u.1 * w.0,
                });
            }
            Relation::EqualLength(s, t) => {
                let sq = |s: &[String; 2]| {
                    let (a, b) = (at(lf, &s[0]), at(lf, &s[1]));
                    (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)
                };
                out.push(sq(s) - sq(t));
            }
            Relation::FixedLength(s, v) => {
                let (a, b) = (at(lf, &s[0]), at(lf, &s[1]));
                out.push((b.0 - a.0).hypot(b.1 - a.1) - v);
            }
            Relation::FixedAngle([a, v, b], deg) => {
                let p = unit(at(lf, v), at(lf, a));
                let q = unit(at(lf, v), at(lf, b));
                let cos = (p.0 * q.0 + p.1 * q.1).clamp(-1.0, 1.0);
                out.push(cos.acos().to_degrees() - deg);
            }
            Relation::Collinear([a, b, c]) => {
                let (a, b, c) = (at(lf, a), at(lf, b), at(lf, c));
                out.push((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0));
            }
            Relation::Midpoint { point, segment } => {
                let (m, p, q) = (at(lf, point), at(lf, &segment[0]), at(lf, &segment[1]));
                out.push(2.0 * m.0 - p.0 - q.0);
                out.push(2.0 * m.1 - p.1 - q.1);
            }
        }
    }
    out
}

pub fn oracle_error(lf: &LogicForm) -> f64 {
    oracle_residuals(lf).iter().map(|r| r * r).sum()
}

/// Unsigned angle `a`-`v`-`b` in degrees, from the dot product.
pub fn oracle_angle(a: Vec2, v: Vec2, b: Vec2) -> f64 {
    let (p, q) = ((a.x - v.x, a.y - v.y), (b.x - v.x, b.y - v.y));
    let cos = (p.0 * q.0 + p.1 * q.1) / (p.0.hypot(p.1) * q.0.hypot(q.1));
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}
