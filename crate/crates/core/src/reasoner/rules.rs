//! Forward chaining to a fixpoint.
//!
//! Numbered rules:
//! R1 triangle angle sum, R2 vertical angles, R3 isosceles base angles,
//! R4 SSS/SAS/ASA congruence, R5 images under rigid motions,
//! R6 alternate angles at parallels, R7 midpoint halves.
//! Supporting rules (always on): equality transitivity, angle value
//! transfer, linear pairs, right angles from perpendiculars and back, and
//! corresponding parts of congruent triangles.

use std::collections::HashMap;

use crate::logic_form::{LogicForm, Origin, Relation, Shape, Transform};

use super::diagram::{Diagram, Pt};
use super::facts::{Angle, Fact, FactSet, Provenance, Seg, Statement};

/// Angle sizes closer than this are treated as equal.
pub const VALUE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    AngleSum,
    VerticalAngles,
    IsoscelesBase,
    Congruence,
    RigidImage,
    AlternateAngles,
    MidpointHalves,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::AngleSum,
        Rule::VerticalAngles,
        Rule::IsoscelesBase,
        Rule::Congruence,
        Rule::RigidImage,
        Rule::AlternateAngles,
        Rule::MidpointHalves,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Which numbered rules are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleSet(u8);

impl RuleSet {
    pub fn all() -> Self {
        RuleSet(Rule::ALL.iter().fold(0, |m, r| m | r.bit()))
    }

    pub fn without(self, r: Rule) -> Self {
        RuleSet(self.0 & !r.bit())
    }

    pub fn contains(self, r: Rule) -> bool {
        self.0 & r.bit() != 0
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::all()
    }
}

/// Premises showing two segments are equal (empty when identical).
pub fn seg_eq(facts: &FactSet, a: Seg, b: Seg) -> Option<Vec<usize>> {
    match Statement::equal_segments(a, b) {
        None => Some(Vec::new()),
        Some(s) => facts.find(&s).map(|i| vec![i]),
    }
}

/// Premises showing two angles are equal, directly or through equal sizes.
pub fn ang_eq(facts: &FactSet, a: Angle, b: Angle) -> Option<Vec<usize>> {
    let Some(s) = Statement::equal_angles(a, b) else {
        return Some(Vec::new());
    };
    if let Some(i) = facts.find(&s) {
        return Some(vec![i]);
    }
    let (va, ia) = facts.angle_value(&a)?;
    let (vb, ib) = facts.angle_value(&b)?;
    ((va - vb).abs() <= VALUE_EPS).then(|| vec![ia, ib])
}

struct Ctx<'a> {
    d: &'a Diagram,
    triangles: Vec<[Pt; 3]>,
    arms: Vec<Vec<Pt>>,
}

impl Ctx<'_> {
    fn angle(&self, a: Pt, v: Pt, b: Pt) -> Option<Angle> {
        Angle::new(self.d, a, v, b)
    }

    /// The arm at `v` opposite to `r`, if drawn.
    fn opposite_arm(&self, v: Pt, r: Pt) -> Option<Pt> {
        self.arms[v as usize]
            .iter()
            .copied()
            .find(|&o| self.d.opposite(v, r, o))
    }
}

fn rule(rule: &'static str, premises: Vec<usize>) -> Provenance {
    Provenance::Rule { rule, premises }
}

fn push(out: &mut Vec<Fact>, statement: Option<Statement>, value: Option<f64>, provenance: Provenance) {
    if let Some(statement) = statement {
        out.push(Fact {
            statement,
            value,
            provenance,
        });
    }
}

/// Facts read directly from declared relations and constructions. Images
/// of transformed copies count only when [`Rule::RigidImage`] is enabled.
pub fn base_facts(lf: &LogicForm, d: &Diagram, rules: RuleSet) -> FactSet {
    let mut facts = FactSet::new();
    let mut out = Vec::new();
    let idx = |l: &str| d.idx(l);
    let sg = |s: &[String; 2]| Some(Seg::new(idx(&s[0])?, idx(&s[1])?)).filter(|s| s.0 != s.1);

    let mut on_circle: HashMap<Pt, Vec<(Pt, usize)>> = HashMap::new();
    let mut lengths: Vec<(Seg, f64, usize)> = Vec::new();
    for (i, rel) in lf.relations.iter().enumerate() {
        let from = Provenance::Relation(vec![i]);
        match rel {
            Relation::PointOnLine { point, line } => {
                if let (Some(p), Some(a), Some(b)) = (idx(point), idx(&line[0]), idx(&line[1])) {
                    if p != a && p != b && a != b {
                        push(&mut out, Some(Statement::collinear([p, a, b])), None, from);
                    }
                }
            }
            Relation::PointOnCircle { point, center } => {
                if let (Some(p), Some(o)) = (idx(point), idx(center)) {
                    let list = on_circle.entry(o).or_default();
                    for &(q, j) in list.iter() {
                        push(
                            &mut out,
                            Statement::equal_segments(Seg::new(o, q), Seg::new(o, p)),
                            None,
                            Provenance::Relation(vec![j, i]),
                        );
                    }
                    list.push((p, i));
                }
            }
            Relation::Perpendicular(a, b) => {
                if let (Some(a), Some(b)) = (sg(a), sg(b)) {
                    push(&mut out, Statement::perpendicular(a, b), None, from);
                }
            }
            Relation::Parallel(a, b) => {
                if let (Some(a), Some(b)) = (sg(a), sg(b)) {
                    push(&mut out, Statement::parallel(a, b), None, from);
                }
            }
            Relation::EqualLength(a, b) => {
                if let (Some(a), Some(b)) = (sg(a), sg(b)) {
                    push(&mut out, Statement::equal_segments(a, b), None, from);
                }
            }
            Relation::FixedLength(s, v) => {
                if let Some(s) = sg(s) {
                    for &(t, w, j) in &lengths {
                        if (w - v).abs() <= VALUE_EPS * v.abs().max(1.0) {
                            push(
                                &mut out,
                                Statement::equal_segments(t, s),
                                None,
                                Provenance::Relation(vec![j, i]),
                            );
                        }
                    }
                    lengths.push((s, *v, i));
                }
            }
            Relation::FixedAngle([a, v, b], deg) => {
                if let (Some(a), Some(v), Some(b)) = (idx(a), idx(v), idx(b)) {
                    if let Some(angle) = Angle::new(d, a, v, b) {
                        push(&mut out, Some(Statement::AngleValue(angle)), Some(*deg), from);
                    }
                }
            }
            Relation::Collinear([a, b, c]) => {
                if let (Some(a), Some(b), Some(c)) = (idx(a), idx(b), idx(c)) {
                    if a != b && b != c && a != c {
                        push(&mut out, Some(Statement::collinear([a, b, c])), None, from);
                    }
                }
            }
            Relation::Midpoint { point, segment } => {
                if let (Some(m), Some(s)) = (idx(point), sg(segment)) {
                    push(&mut out, Some(Statement::Midpoint(m, s)), None, from);
                }
            }
        }
    }

    labeled_midpoints(d, &mut out);
    if rules.contains(Rule::RigidImage) {
        image_facts(lf, d, &mut out);
    }
    for f in out {
        facts.insert(f);
    }
    facts
}

/// Auxiliary points (other than transform images) placed at a midpoint.
fn labeled_midpoints(d: &Diagram, out: &mut Vec<Fact>) {
    let n = d.len() as Pt;
    for m in 0..n {
        if !d.auxiliary[m as usize] || d.images[m as usize] {
            continue;
        }
        for a in 0..n {
            for b in a + 1..n {
                if a == m || b == m || d.coincide(a, b) {
                    continue;
                }
                let mid = d.at(a).midpoint(d.at(b));
                if d.at(m).distance(mid) <= d.tol() {
                    push(
                        out,
                        Some(Statement::Midpoint(m, Seg::new(a, b))),
                        None,
                        Provenance::Construction(format!(
                            "{} labeled at the midpoint of {}{}",
                            d.name(m),
                            d.name(a),
                            d.name(b)
                        )),
                    );
                }
            }
        }
    }
}

/// Parts of transformed copies match their pre-images (R5).
fn image_facts(lf: &LogicForm, d: &Diagram, out: &mut Vec<Fact>) {
    for o in &lf.objects {
        let Some(Origin::Image { of, transform }) = &o.origin else {
            continue;
        };
        let img: Option<Vec<Pt>> = o.labels().iter().map(|l| d.idx(l)).collect();
        let pre: Option<Vec<Pt>> = of.iter().map(|l| d.idx(l)).collect();
        let (Some(img), Some(pre)) = (img, pre) else {
            continue;
        };
        if img.len() != pre.len() {
            continue;
        }
        let how = match transform {
            Transform::Reflect { axis } => format!("reflection in {}{}", axis[0], axis[1]),
            Transform::Rotate { center, degrees } => {
                format!("rotation about {center} by {}°", crate::canonical::fmt_real(*degrees))
            }
            Transform::Translate { vector } => format!(
                "translation by ({}, {})",
                crate::canonical::fmt_real(vector.x),
                crate::canonical::fmt_real(vector.y)
            ),
        };
        let names = |v: &[Pt]| v.iter().map(|&p| d.name(p)).collect::<String>();
        let why = || Provenance::Construction(format!("{} is the image of {} under {how}", names(&img), names(&pre)));

        match &o.shape {
            Shape::Polygon(_) if img.len() == 3 => {
                push(out, Statement::congruent([pre[0], pre[1], pre[2]], [img[0], img[1], img[2]]), None, why());
            }
            Shape::Polygon(_) => {
                let k = img.len();
                for i in 0..k {
                    let j = (i + 1) % k;
                    let h = (i + k - 1) % k;
                    push(out, Statement::equal_segments(Seg::new(pre[i], pre[j]), Seg::new(img[i], img[j])), None, why());
                    if let (Some(a), Some(b)) = (
                        Angle::new(d, pre[h], pre[i], pre[j]),
                        Angle::new(d, img[h], img[i], img[j]),
                    ) {
                        push(out, Statement::equal_angles(a, b), None, why());
                    }
                }
            }
            Shape::Line(_) => {
                push(out, Statement::equal_segments(Seg::new(pre[0], pre[1]), Seg::new(img[0], img[1])), None, why());
            }
            Shape::Circle { .. } => {}
        }

        let moved: Vec<(Pt, Pt)> = pre
            .iter()
            .zip(&img)
            .map(|(&p, &q)| (p, q))
            .filter(|(p, q)| p != q && !d.coincide(*p, *q))
            .collect();
        match transform {
            Transform::Rotate { center, degrees } => {
                let Some(c) = d.idx(center) else { continue };
                let turn = degrees.rem_euclid(360.0);
                let size = turn.min(360.0 - turn);
                for &(p, q) in &moved {
                    if p == c {
                        continue;
                    }
                    push(out, Statement::equal_segments(Seg::new(c, p), Seg::new(c, q)), None, why());
                    if (size - 180.0).abs() <= VALUE_EPS {
                        push(out, Some(Statement::Midpoint(c, Seg::new(p, q))), None, why());
                    } else if let Some(a) = Angle::new(d, p, c, q) {
                        push(out, Some(Statement::AngleValue(a)), Some(size), why());
                    }
                }
            }
            Transform::Reflect { axis } => {
                let (Some(a), Some(b)) = (d.idx(&axis[0]), d.idx(&axis[1])) else {
                    continue;
                };
                for &(p, q) in &moved {
                    push(out, Statement::perpendicular(Seg::new(p, q), Seg::new(a, b)), None, why());
                    for x in [a, b] {
                        if x != p && x != q {
                            push(out, Statement::equal_segments(Seg::new(x, p), Seg::new(x, q)), None, why());
                        }
                    }
                }
            }
            Transform::Translate { .. } => {
                for (i, &(p, q)) in moved.iter().enumerate() {
                    for &(r, s) in &moved[i + 1..] {
                        push(out, Statement::equal_segments(Seg::new(p, q), Seg::new(r, s)), None, why());
                        if !d.collinear(p, q, r) {
                            push(out, Statement::parallel(Seg::new(p, q), Seg::new(r, s)), None, why());
                        }
                    }
                }
            }
        }
    }
}

/// Closure of `seed` plus the form's own facts under `rules`. Seed facts
/// must be expressed over the same form.
pub fn derive_facts(lf: &LogicForm, seed: &FactSet, rules: RuleSet) -> FactSet {
    let d = Diagram::new(lf);
    derive_with(lf, &d, seed, rules)
}

pub(crate) fn derive_with(lf: &LogicForm, d: &Diagram, seed: &FactSet, rules: RuleSet) -> FactSet {
    let mut facts = FactSet::new();
    for f in seed.facts() {
        let mut f = f.clone();
        if !matches!(f.provenance, Provenance::Seed) {
            f.provenance = Provenance::Seed;
        }
        facts.insert(f);
    }
    for f in base_facts(lf, d, rules).facts() {
        facts.insert(f.clone());
    }

    let ctx = Ctx {
        d,
        triangles: d.triangles(),
        arms: (0..d.len() as Pt).map(|v| d.arms(v)).collect(),
    };
    loop {
        let mut out = Vec::new();
        transitivity(&facts, &mut out);
        value_transfer(&facts, &mut out);
        linear_pairs(&ctx, &facts, &mut out);
        right_angles(&ctx, &facts, &mut out);
        corresponding_parts(&ctx, &facts, &mut out);
        if rules.contains(Rule::AngleSum) {
            angle_sum(&ctx, &facts, &mut out);
        }
        if rules.contains(Rule::VerticalAngles) {
            vertical_angles(&ctx, &mut out);
        }
        if rules.contains(Rule::IsoscelesBase) {
            isosceles_base(&ctx, &facts, &mut out);
        }
        if rules.contains(Rule::Congruence) {
            congruence(&ctx, &facts, &mut out);
        }
        if rules.contains(Rule::AlternateAngles) {
            alternate_angles(&ctx, &facts, &mut out);
        }
        if rules.contains(Rule::MidpointHalves) {
            midpoint_halves(&facts, &mut out);
        }
        let mut grew = false;
        for f in out {
            grew |= facts.insert(f);
        }
        if !grew {
            return facts;
        }
    }
}

fn transitivity(facts: &FactSet, out: &mut Vec<Fact>) {
    let mut segs: HashMap<Seg, Vec<(Seg, usize)>> = HashMap::new();
    let mut angs: HashMap<Angle, Vec<(Angle, usize)>> = HashMap::new();
    let mut seg_keys = Vec::new();
    let mut ang_keys = Vec::new();
    for (i, f) in facts.facts().iter().enumerate() {
        match f.statement {
            Statement::EqualSegments(a, b) => {
                for (k, o) in [(a, b), (b, a)] {
                    let e = segs.entry(k).or_default();
                    if e.is_empty() {
                        seg_keys.push(k);
                    }
                    e.push((o, i));
                }
            }
            Statement::EqualAngles(a, b) => {
                for (k, o) in [(a, b), (b, a)] {
                    let e = angs.entry(k).or_default();
                    if e.is_empty() {
                        ang_keys.push(k);
                    }
                    e.push((o, i));
                }
            }
            _ => {}
        }
    }
    for k in seg_keys {
        let list = &segs[&k];
        for (x, &(a, i)) in list.iter().enumerate() {
            for &(b, j) in &list[x + 1..] {
                push(out, Statement::equal_segments(a, b), None, rule("transitivity", vec![i.min(j), i.max(j)]));
            }
        }
    }
    for k in ang_keys {
        let list = &angs[&k];
        for (x, &(a, i)) in list.iter().enumerate() {
            for &(b, j) in &list[x + 1..] {
                push(out, Statement::equal_angles(a, b), None, rule("transitivity", vec![i.min(j), i.max(j)]));
            }
        }
    }
}

fn value_transfer(facts: &FactSet, out: &mut Vec<Fact>) {
    for (k, f) in facts.facts().iter().enumerate() {
        let Statement::EqualAngles(a, b) = f.statement else {
            continue;
        };
        match (facts.angle_value(&a), facts.angle_value(&b)) {
            (Some((v, i)), None) => push(out, Some(Statement::AngleValue(b)), Some(v), rule("angle_value_transfer", vec![i.min(k), i.max(k)])),
            (None, Some((v, i))) => push(out, Some(Statement::AngleValue(a)), Some(v), rule("angle_value_transfer", vec![i.min(k), i.max(k)])),
            _ => {}
        }
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn angle_sum(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    for &[a, b, c] in &ctx.triangles {
        let angles = [ctx.angle(b, a, c), ctx.angle(a, b, c), ctx.angle(a, c, b)];
        let [Some(x), Some(y), Some(z)] = angles else {
            continue;
        };
        let vals = [facts.angle_value(&x), facts.angle_value(&y), facts.angle_value(&z)];
        let all = [x, y, z];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            match (vals[i], vals[j], vals[k]) {
                (Some((vi, fi)), Some((vj, fj)), None) => push(
                    out,
                    Some(Statement::AngleValue(all[k])),
                    Some(180.0 - vi - vj),
                    rule("angle_sum", sorted(vec![fi, fj])),
                ),
                (Some((vi, fi)), None, None) => {
                    if let Some(p) = ang_eq(facts, all[j], all[k]) {
                        let half = (180.0 - vi) / 2.0;
                        let mut prem = p;
                        prem.push(fi);
                        let prem = sorted(prem);
                        push(out, Some(Statement::AngleValue(all[j])), Some(half), rule("angle_sum", prem.clone()));
                        push(out, Some(Statement::AngleValue(all[k])), Some(half), rule("angle_sum", prem));
                    }
                }
                _ => {}
            }
        }
    }
}

fn vertical_angles(ctx: &Ctx, out: &mut Vec<Fact>) {
    for v in 0..ctx.d.len() as Pt {
        let arms = &ctx.arms[v as usize];
        for (i, &r1) in arms.iter().enumerate() {
            let Some(o1) = ctx.opposite_arm(v, r1) else { continue };
            for &r2 in &arms[i + 1..] {
                if r2 == o1 {
                    continue;
                }
                let Some(o2) = ctx.opposite_arm(v, r2) else { continue };
                if let (Some(a), Some(b)) = (ctx.angle(r1, v, r2), ctx.angle(o1, v, o2)) {
                    push(out, Statement::equal_angles(a, b), None, rule("vertical_angles", Vec::new()));
                }
            }
        }
    }
}

fn linear_pairs(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    for v in 0..ctx.d.len() as Pt {
        let arms = &ctx.arms[v as usize];
        for &r1 in arms {
            let Some(o1) = ctx.opposite_arm(v, r1) else { continue };
            if o1 < r1 {
                continue;
            }
            for &r2 in arms {
                if r2 == r1 || r2 == o1 {
                    continue;
                }
                let (Some(x), Some(y)) = (ctx.angle(r1, v, r2), ctx.angle(r2, v, o1)) else {
                    continue;
                };
                match (facts.angle_value(&x), facts.angle_value(&y)) {
                    (Some((val, i)), None) => push(out, Some(Statement::AngleValue(y)), Some(180.0 - val), rule("linear_pair", vec![i])),
                    (None, Some((val, i))) => push(out, Some(Statement::AngleValue(x)), Some(180.0 - val), rule("linear_pair", vec![i])),
                    (None, None) => {
                        if let Some(p) = ang_eq(facts, x, y) {
                            push(out, Some(Statement::AngleValue(x)), Some(90.0), rule("linear_pair", p.clone()));
                            push(out, Some(Statement::AngleValue(y)), Some(90.0), rule("linear_pair", p));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

fn right_angles(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    let d = ctx.d;
    for (k, f) in facts.facts().iter().enumerate() {
        match f.statement {
            Statement::Perpendicular(s, t) => {
                let on_s = d.line_points(s.0, s.1);
                let on_t = d.line_points(t.0, t.1);
                for &v in on_s.iter().filter(|v| on_t.contains(v)) {
                    for &p in &on_s {
                        for &q in &on_t {
                            if let Some(a) = ctx.angle(p, v, q) {
                                push(out, Some(Statement::AngleValue(a)), Some(90.0), rule("right_angle", vec![k]));
                            }
                        }
                    }
                }
            }
            Statement::AngleValue(a) if f.value.is_some_and(|v| (v - 90.0).abs() <= VALUE_EPS) => {
                let (p, q) = a.arms;
                push(
                    out,
                    Statement::perpendicular(Seg::new(a.vertex, p), Seg::new(a.vertex, q)),
                    None,
                    rule("right_angle", vec![k]),
                );
            }
            _ => {}
        }
    }
}

fn isosceles_base(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    for &t in &ctx.triangles {
        for i in 0..3 {
            let (x, y, z) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
            let Some(p) = seg_eq(facts, Seg::new(x, y), Seg::new(x, z)) else {
                continue;
            };
            if let (Some(a), Some(b)) = (ctx.angle(x, y, z), ctx.angle(x, z, y)) {
                push(out, Statement::equal_angles(a, b), None, rule("isosceles_base", p));
            }
        }
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn congruence(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    let tris = &ctx.triangles;
    for (i, p) in tris.iter().enumerate() {
        for q0 in &tris[i + 1..] {
            for perm in PERMUTATIONS {
                let q = [q0[perm[0]], q0[perm[1]], q0[perm[2]]];
                let Some(st) = Statement::congruent(*p, q) else { continue };
                if facts.contains(&st) {
                    continue;
                }
                if let Some((name, prem)) = congruent_by(ctx, facts, p, &q) {
                    push(out, Some(st), None, rule(name, sorted(prem)));
                }
            }
        }
    }
}

fn congruent_by(ctx: &Ctx, facts: &FactSet, p: &[Pt; 3], q: &[Pt; 3]) -> Option<(&'static str, Vec<usize>)> {
    // side i joins vertices i and i+1; angle i sits at vertex i
    let side = |i: usize| seg_eq(facts, Seg::new(p[i], p[(i + 1) % 3]), Seg::new(q[i], q[(i + 1) % 3]));
    let angle = |i: usize| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        ang_eq(facts, ctx.angle(p[k], p[i], p[j])?, ctx.angle(q[k], q[i], q[j])?)
    };
    let sides = [side(0), side(1), side(2)];
    if let [Some(a), Some(b), Some(c)] = &sides {
        return Some(("congruence_sss", [a.clone(), b.clone(), c.clone()].concat()));
    }
    let angles = [angle(0), angle(1), angle(2)];
    for i in 0..3 {
        let prev = (i + 2) % 3;
        if let (Some(a), Some(b), Some(c)) = (&sides[prev], &sides[i], &angles[i]) {
            return Some(("congruence_sas", [a.clone(), b.clone(), c.clone()].concat()));
        }
    }
    for i in 0..3 {
        let j = (i + 1) % 3;
        if let (Some(a), Some(b)) = (&angles[i], &angles[j]) {
            // two angles fix the third, so any matching side will do
            if let Some(s) = sides.iter().flatten().next() {
                return Some(("congruence_asa", [a.clone(), b.clone(), s.clone()].concat()));
            }
        }
    }
    None
}

fn corresponding_parts(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    for (k, f) in facts.facts().iter().enumerate() {
        let Statement::CongruentTriangles(p, q) = f.statement else {
            continue;
        };
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            push(
                out,
                Statement::equal_segments(Seg::new(p[i], p[j]), Seg::new(q[i], q[j])),
                None,
                rule("corresponding_parts", vec![k]),
            );
            if let (Some(a), Some(b)) = (ctx.angle(p[l], p[i], p[j]), ctx.angle(q[l], q[i], q[j])) {
                push(out, Statement::equal_angles(a, b), None, rule("corresponding_parts", vec![k]));
            }
        }
    }
}

fn alternate_angles(ctx: &Ctx, facts: &FactSet, out: &mut Vec<Fact>) {
    let d = ctx.d;
    for (k, f) in facts.facts().iter().enumerate() {
        let Statement::Parallel(s, t) = f.statement else {
            continue;
        };
        let l1 = d.line_points(s.0, s.1);
        let l2 = d.line_points(t.0, t.1);
        if l1.iter().any(|p| l2.contains(p)) {
            continue;
        }
        for &p in &l1 {
            for &q in l2.iter().filter(|&&q| d.joined(p, q)) {
                for &x in l1.iter().filter(|&&x| !d.coincide(x, p)) {
                    for &y in l2.iter().filter(|&&y| !d.coincide(y, q)) {
                        let antiparallel = (d.at(x) - d.at(p)).dot(d.at(y) - d.at(q)) < 0.0;
                        let sx = d.side(x, p, q);
                        if antiparallel && sx != 0 && sx == -d.side(y, p, q) {
                            if let (Some(a), Some(b)) = (ctx.angle(x, p, q), ctx.angle(y, q, p)) {
                                push(out, Statement::equal_angles(a, b), None, rule("alternate_angles", vec![k]));
                            }
                        }
                    }
                }
            }
        }
    }
}

fn midpoint_halves(facts: &FactSet, out: &mut Vec<Fact>) {
    for (k, f) in facts.facts().iter().enumerate() {
        let Statement::Midpoint(m, s) = f.statement else {
            continue;
        };
        push(out, Statement::equal_segments(Seg::new(s.0, m), Seg::new(m, s.1)), None, rule("midpoint_halves", vec![k]));
        if m != s.0 && m != s.1 {
            push(out, Some(Statement::collinear([s.0, m, s.1])), None, rule("midpoint_halves", vec![k]));
        }
    }
}

/// Problems found when auditing a fact set against its form.
#[derive(Debug, Clone, PartialEq)]
pub enum ProvenanceIssue {
    /// A premise index does not precede the fact.
    ForwardPremise { fact: usize, premise: usize },
    BadRelation { fact: usize, relation: usize },
    /// The statement is false in the diagram.
    Unsound { fact: usize, statement: String },
}

/// Check that every fact rests on earlier facts, declared relations, seeds or
/// constructions, and that every statement holds in the coordinates.
pub fn audit(lf: &LogicForm, facts: &FactSet) -> Vec<ProvenanceIssue> {
    let d = Diagram::new(lf);
    let mut issues = Vec::new();
    for (i, f) in facts.facts().iter().enumerate() {
        match &f.provenance {
            Provenance::Rule { premises, .. } => {
                if let Some(&p) = premises.iter().find(|&&p| p >= i) {
                    issues.push(ProvenanceIssue::ForwardPremise { fact: i, premise: p });
                }
            }
            Provenance::Relation(rels) => {
                if let Some(&r) = rels.iter().find(|&&r| r >= lf.relations.len()) {
                    issues.push(ProvenanceIssue::BadRelation { fact: i, relation: r });
                }
            }
            Provenance::Seed | Provenance::Construction(_) => {}
        }
        if !f.statement.holds_numerically(&d, f.value, 1e-6) {
            issues.push(ProvenanceIssue::Unsound {
                fact: i,
                statement: format!("{}", super::facts::DisplayFact { fact: f, diagram: &d }),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{execute, Action};
    use crate::logic_form::{seg, ObjectDecl};

    fn triangle() -> LogicForm {
        LogicForm::new()
            .with_point("A", 0.0, 0.0)
            .with_point("B", 4.0, 0.0)
            .with_point("C", 1.0, 3.0)
            .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
    }

    fn angle(d: &Diagram, s: &str) -> Angle {
        let p: Vec<Pt> = s.split(' ').map(|l| d.idx(l).unwrap()).collect();
        Angle::new(d, p[0], p[1], p[2]).unwrap()
    }

    #[test]
    fn third_angle_from_sum() {
        let lf = triangle()
            .with_relation(Relation::FixedAngle(["B".into(), "A".into(), "C".into()], 60.0))
            .with_relation(Relation::FixedAngle(["A".into(), "B".into(), "C".into()], 60.0));
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        let d = Diagram::new(&lf);
        let (v, _) = facts.angle_value(&angle(&d, "A C B")).unwrap();
        assert!((v - 60.0).abs() < 1e-12);
    }

    #[test]
    fn empty_relations_give_seed() {
        let lf = triangle();
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        assert!(facts.is_empty());
    }

    #[test]
    fn rotated_copy_is_congruent() {
        let lf = execute(
            &triangle(),
            &Action::Rotate {
                object: "triangle_ABC".into(),
                center: "A".into(),
                degrees: 90.0,
            },
        )
        .unwrap()
        .next_form;
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        let d = Diagram::new(&lf);
        let i = |l: &str| d.idx(l).unwrap();
        let cong = Statement::congruent([i("A"), i("B"), i("C")], [i("A"), i("B'"), i("C'")]).unwrap();
        assert!(facts.contains(&cong));
        let eq = Statement::equal_segments(Seg::new(i("A"), i("B")), Seg::new(i("A"), i("B'"))).unwrap();
        assert!(facts.contains(&eq));
        let bc = Statement::equal_segments(Seg::new(i("B"), i("C")), Seg::new(i("B'"), i("C'"))).unwrap();
        assert!(facts.contains(&bc));
        assert!(audit(&lf, &facts).is_empty());
    }

    #[test]
    fn isosceles_median_gives_right_angle() {
        let lf = LogicForm::new()
            .with_point("A", 0.0, 4.0)
            .with_point("B", -3.0, 0.0)
            .with_point("C", 3.0, 0.0)
            .with_point("M", 0.0, 0.0)
            .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
            .with_line("A", "M")
            .with_relation(Relation::EqualLength(seg("A", "B"), seg("A", "C")))
            .with_relation(Relation::Midpoint {
                point: "M".into(),
                segment: seg("B", "C"),
            });
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all().without(Rule::IsoscelesBase));
        let d = Diagram::new(&lf);
        let (v, i) = facts.angle_value(&angle(&d, "A M B")).unwrap();
        assert_eq!(v, 90.0);
        let support = facts.support(i);
        assert!(support.iter().any(|&j| matches!(
            facts.get(j).provenance,
            Provenance::Rule { rule: "congruence_sss", .. }
        )));
        assert!(audit(&lf, &facts).is_empty());
    }

    #[test]
    fn alternate_angles_transfer_values() {
        let lf = LogicForm::new()
            .with_point("A", 0.0, 0.0)
            .with_point("B", 5.0, 0.0)
            .with_point("C", -2.0, 3.0)
            .with_point("D", 2.0, 3.0)
            .with_line("A", "B")
            .with_line("D", "C")
            .with_line("A", "D")
            .with_relation(Relation::Parallel(seg("A", "B"), seg("D", "C")))
            .with_relation(Relation::FixedAngle(
                ["B".into(), "A".into(), "D".into()],
                (3.0f64).atan2(2.0).to_degrees(),
            ));
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        let d = Diagram::new(&lf);
        assert!(facts.angle_value(&angle(&d, "A D C")).is_some());
        assert!(audit(&lf, &facts).is_empty());
    }

    #[test]
    fn closure_is_idempotent() {
        let lf = LogicForm::new()
            .with_point("A", 0.0, 0.0)
            .with_point("B", 4.0, 0.0)
            .with_point("C", 2.0, 3.0)
            .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
            .with_relation(Relation::EqualLength(seg("A", "C"), seg("B", "C")))
            .with_relation(Relation::FixedAngle(
                ["B".into(), "A".into(), "C".into()],
                (3.0f64).atan2(2.0).to_degrees(),
            ));
        let once = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        let twice = derive_facts(&lf, &once, RuleSet::all());
        let a: Vec<_> = once.statements().collect();
        let b: Vec<_> = twice.statements().collect();
        assert_eq!(a, b);
    }
}
