mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use serde_json::json;

use common::*;
use sketchproof::action::{execute, Action};
use sketchproof::answer::AnswerValue;
use sketchproof::geom::{reflection_map, rotation_map, translation_map, AffineMap};
use sketchproof::harness::{r_format, r_result, run_episode, Problem};
use sketchproof::logic_form::{
    diff_forms, parse_logic_form, seg, serialize_logic_form, validate, LogicForm, ObjectDecl, Relation,
};
use sketchproof::reasoner::{audit, derive_facts, FactSet, RuleSet, ScriptedReasoner};
use sketchproof::render::{render_svg, RenderStyle};
use sketchproof::solver::{solve, total_error};
use sketchproof::Vec2;

fn form(seed: u64) -> LogicForm {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=6);
    let k = if n >= 3 { rng.gen_range(0..=4) } else { 0 };
    random_form(&mut rng, n, 4.0, k)
}

fn moved(lf: &LogicForm, m: &AffineMap) -> LogicForm {
    let mut out = lf.clone();
    for p in &mut out.points {
        let q = m.apply(p.pos());
        p.x = q.x;
        p.y = q.y;
    }
    out
}

fn coord() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

fn point() -> impl Strategy<Value = Vec2> {
    (coord(), coord()).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let lf = form(seed);
        let text = serialize_logic_form(&lf);
        let back = parse_logic_form(&text).unwrap();
        prop_assert_eq!(serialize_logic_form(&back), text);
        prop_assert!(diff_forms(&lf, &back, 1e-9).is_empty());
    }

    #[test]
    fn a_form_has_no_diff_with_itself(seed in any::<u64>()) {
        let lf = form(seed);
        prop_assert!(diff_forms(&lf, &lf, 0.0).is_empty());
    }

    #[test]
    fn dropping_a_referenced_point_is_caught(seed in any::<u64>()) {
        let mut lf = form(seed);
        let used: BTreeSet<String> = lf.relations.iter().flat_map(|r| r.labels()).map(String::from).collect();
        prop_assume!(!used.is_empty());
        let victim = used.iter().next().unwrap().clone();
        lf.points.retain(|p| p.name != victim);
        prop_assert!(!validate(&lf).is_empty());
    }

    #[test]
    fn rotation_by_a_full_turn_is_identity(c in point(), a in point()) {
        prop_assert!(rotation_map(c, 360.0).apply(a).distance(a) < 1e-9);
    }

    #[test]
    fn reflection_is_an_involution(p in point(), q in point(), a in point()) {
        prop_assume!(p.distance(q) > 1e-6);
        let m = reflection_map(p, q).unwrap();
        prop_assert!(m.compose(&m).apply(a).distance(a) < 1e-9);
    }

    #[test]
    fn translation_undoes(t in point(), a in point()) {
        let back = translation_map(Vec2::new(-t.x, -t.y)).compose(&translation_map(t));
        prop_assert!(back.apply(a).distance(a) < 1e-9);
    }

    #[test]
    fn maps_preserve_distance(c in point(), deg in -720.0..720.0f64, a in point(), b in point()) {
        let m = rotation_map(c, deg);
        prop_assert!((m.apply(a).distance(m.apply(b)) - a.distance(b)).abs() < 1e-9);
    }

    #[test]
    fn solver_never_increases_error(seed in any::<u64>()) {
        let lf = form(seed);
        let (out, report) = solve(&lf, &BTreeSet::new()).unwrap();
        prop_assert!(report.final_error <= report.initial_error);
        prop_assert!(report.iterations <= 500);
        prop_assert!((total_error(&out).unwrap() - report.final_error).abs() <= 1e-9 * report.final_error.max(1.0));
    }

    #[test]
    fn solver_is_deterministic(seed in any::<u64>()) {
        let lf = form(seed);
        let a = solve(&lf, &BTreeSet::new()).unwrap();
        let b = solve(&lf, &BTreeSet::new()).unwrap();
        prop_assert_eq!(serialize_logic_form(&a.0), serialize_logic_form(&b.0));
        prop_assert_eq!(a.1, b.1);
    }

    #[test]
    fn pinned_points_do_not_move(seed in any::<u64>()) {
        let lf = form(seed);
        let pins: BTreeSet<String> = lf.points.iter().step_by(2).map(|p| p.name.clone()).collect();
        let (out, _) = solve(&lf, &pins).unwrap();
        for name in &pins {
            let (a, b) = (lf.point(name).unwrap(), out.point(name).unwrap());
            prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn error_is_invariant_under_rigid_motion(seed in any::<u64>(), deg in -180.0..180.0f64, t in point()) {
        let lf = form(seed);
        let m = translation_map(t).compose(&rotation_map(Vec2::new(0.0, 0.0), deg));
        let (e0, e1) = (total_error(&lf).unwrap(), total_error(&moved(&lf, &m)).unwrap());
        prop_assert!((e0 - e1).abs() <= 1e-6 * e0.max(1.0), "{} vs {}", e0, e1);
    }

    #[test]
    fn rendering_is_deterministic_and_complete(seed in any::<u64>()) {
        let lf = form(seed);
        let svg = render_svg(&lf, &RenderStyle::default()).unwrap();
        prop_assert_eq!(&render_svg(&lf, &RenderStyle::default()).unwrap(), &svg);
        for p in &lf.points {
            let pt = format!("id=\"pt-{}\"", p.name);
            let label = format!("id=\"label-{}\"", p.name);
            prop_assert!(svg.contains(&pt));
            prop_assert!(svg.contains(&label));
        }
        prop_assert_eq!(svg.matches("id=\"obj-").count(), lf.objects.len());
    }

    #[test]
    fn executed_actions_keep_forms_valid(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mut lf = random_form(&mut rng, 4, 3.0, 0);
        for step in 0..20 {
            let action = random_action(&mut rng, &lf, step);
            if let Ok(res) = execute(&lf, &action) {
                prop_assert!(validate(&res.next_form).is_empty(), "{} broke the form", action);
                lf = res.next_form;
            }
        }
    }

    #[test]
    fn episodes_respect_the_step_budget(seed in any::<u64>(), max_steps in 1usize..8) {
        let mut rng = rng(seed);
        let lf = random_form(&mut rng, 4, 3.0, 0);
        let steps: Vec<_> = (0..rng.gen_range(0..12))
            .map(|k| json!({"reasoning": "mark a point", "action": {"op": "label_point", "name": format!("Q{k}"), "coordinates": [k as f64, 1.0]}}))
            .collect();
        let n = steps.len();
        let p = Problem {
            id: "p".into(),
            text: String::new(),
            initial_form: lf,
            answer_type: AnswerValue::degrees(30.0).answer_type(),
            gold_answer: AnswerValue::degrees(30.0),
            aliases: vec![],
            gold_proof: None,
        };
        let t = run_episode(&p, &mut ScriptedReasoner::new(steps), max_steps);
        prop_assert!(t.steps.len() <= max_steps);
        prop_assert_eq!(t.truncated, n >= max_steps, "{:?}", t.failure);
        prop_assert!(t.check_frames().is_ok());
        prop_assert!(matches!(r_format(&t), 0 | 1));
        prop_assert_eq!(r_result(t.terminal_answer.as_ref(), &p), 0);
    }
}

/// A triangle with constructed points whose declared relations hold exactly,
/// then a few rigid moves of the triangle.
fn consistent_form(seed: u64) -> LogicForm {
    let mut rng = rng(seed);
    let mut v = || Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let (a, b, c) = (v(), v(), v());
    let (t, s, turn) = (v().x / 5.0, v().y / 5.0, v().x * 36.0);
    let d = reflection_map(a, b).unwrap().apply(c);
    let lerp = |p: Vec2, q: Vec2, k: f64| Vec2::new(p.x + k * (q.x - p.x), p.y + k * (q.y - p.y));
    let m = lerp(a, b, 0.5);
    let p = lerp(a, b, t);
    let e = Vec2::new(c.x + s * (b.x - a.x), c.y + s * (b.y - a.y));
    let mut lf = LogicForm::new()
        .with_point("A", a.x, a.y)
        .with_point("B", b.x, b.y)
        .with_point("C", c.x, c.y)
        .with_point("D", d.x, d.y)
        .with_point("M", m.x, m.y)
        .with_point("P", p.x, p.y)
        .with_point("E", e.x, e.y)
        .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
        .with_line("A", "B")
        .with_line("C", "D")
        .with_line("C", "E")
        .with_relation(Relation::Midpoint { point: "M".into(), segment: seg("A", "B") })
        .with_relation(Relation::EqualLength(seg("A", "C"), seg("A", "D")))
        .with_relation(Relation::EqualLength(seg("B", "C"), seg("B", "D")))
        .with_relation(Relation::Perpendicular(seg("C", "D"), seg("A", "B")))
        .with_relation(Relation::PointOnLine { point: "P".into(), line: seg("A", "B") })
        .with_relation(Relation::Parallel(seg("C", "E"), seg("A", "B")))
        .with_relation(Relation::FixedAngle(["B".into(), "A".into(), "C".into()], oracle_angle(b, a, c)))
        .with_relation(Relation::FixedLength(seg("A", "C"), a.distance(c)));
    for action in [
        Action::Rotate { object: "triangle_ABC".into(), center: "A".into(), degrees: turn },
        Action::Reflect { object: "triangle_ABC".into(), axis: ["A".into(), "B".into()] },
    ] {
        if let Ok(res) = execute(&lf, &action) {
            lf = res.next_form;
        }
    }
    lf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derived_facts_pass_the_audit(seed in any::<u64>()) {
        let lf = consistent_form(seed);
        prop_assume!(oracle_error(&lf) < 1e-18);
        let facts = derive_facts(&lf, &FactSet::new(), RuleSet::all());
        prop_assert!(!facts.is_empty());
        let issues = audit(&lf, &facts);
        prop_assert!(issues.is_empty(), "{:?}", issues);
    }
}
