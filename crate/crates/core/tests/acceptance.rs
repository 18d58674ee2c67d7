//! The nine acceptance criteria, one line each. Runs without the libtest
//! harness so the report is always printed; exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use common::*;
use sketchproof::action::{execute, Action};
use sketchproof::answer::{AnswerType, AnswerValue};
use sketchproof::geom::{reflection_map, rotation_map, translation_map};
use sketchproof::harness::{
    load_problems, r_format, r_result, run_episode, stats_file, Failure, FailureKind, Problem,
    Trajectory, DEFAULT_MAX_STEPS,
};
use sketchproof::logic_form::{
    diff_forms, parse_logic_form, seg, serialize_logic_form, validate, LogicForm, ObjectDecl,
    Relation,
};
use sketchproof::reasoner::diagram::Diagram;
use sketchproof::reasoner::{audit, derive_facts, parse_goal, FactSet, RuleReasoner, RuleSet, ScriptedReasoner};
use sketchproof::render::{render_svg, RenderStyle};
use sketchproof::solver::{error_gradient, solve, total_error, ParamVector};
use sketchproof::Vec2;

type Verdict = Result<String, String>;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn within(budget: Duration, started: Instant, detail: String) -> Verdict {
    let took = started.elapsed();
    if took > budget {
        Err(format!("{detail}; took {took:.2?}, budget {budget:?}"))
    } else {
        Ok(format!("{detail}; {took:.2?}"))
    }
}

fn transform_laws() -> Verdict {
    let started = Instant::now();
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    let cases = 10_000;
    let v = |rng: &mut rand_chacha::ChaCha8Rng| Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
    for _ in 0..cases {
        let (c, p, q, a, b) = (v(&mut rng), v(&mut rng), v(&mut rng), v(&mut rng), v(&mut rng));
        let t = v(&mut rng);
        let deg = rng.gen_range(-720.0..720.0);

        let full = rotation_map(c, 360.0);
        let Ok(mirror) = reflection_map(p, q) else { continue };
        let twice = mirror.compose(&mirror);
        let there_back = translation_map(Vec2::new(-t.x, -t.y)).compose(&translation_map(t));
        for m in [&full, &twice, &there_back] {
            worst = worst.max(m.apply(a).distance(a)).max(m.apply(b).distance(b));
        }
        for m in [rotation_map(c, deg), mirror, translation_map(t)] {
            let d = (m.apply(a).distance(m.apply(b)) - a.distance(b)).abs();
            worst = worst.max(d);
        }
    }
    if worst >= 1e-9 {
        return Err(format!("max deviation {worst:e} over {cases} cases"));
    }
    within(Duration::from_secs(5), started, format!("{cases} cases, max deviation {worst:.1e}"))
}

fn gradient_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = rng(2);
    let h = 1e-6;
    let (mut samples, mut worst) = (0, 0.0f64);
    while samples < 1000 {
        let n = rng.gen_range(3..=5);
        let k = rng.gen_range(1..=3);
        let lf = random_form(&mut rng, n, 3.0, k);
        let params = ParamVector::from_form(&lf, &BTreeSet::new());
        let Ok(analytic) = error_gradient(&lf, &params) else { continue };
        let mut fd = vec![0.0; params.len()];
        let mut ok = true;
        for i in 0..params.len() {
            let mut e = [0.0; 2];
            for (j, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut shifted = params.clone();
                shifted.values[i] += sign * h;
                match total_error(&shifted.apply_to(&lf).unwrap()) {
                    Ok(v) => e[j] = v,
                    Err(_) => ok = false,
                }
            }
            fd[i] = (e[0] - e[1]) / (2.0 * h);
        }
        if !ok {
            continue;
        }
        let diff: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        worst = worst.max(diff / scale);
        samples += 1;
    }
    if worst >= 1e-5 {
        return Err(format!("worst relative error {worst:e} over {samples} samples"));
    }
    within(Duration::from_secs(10), started, format!("{samples} samples, worst relative error {worst:.1e}"))
}

fn repair_configs() -> Vec<(&'static str, LogicForm)> {
    let square = LogicForm::new()
        .with_point("A", 0.0, 0.0)
        .with_point("B", 1.0, 0.0)
        .with_point("C", 1.0, 1.0)
        .with_point("D", 0.0, 1.0)
        .with_object(ObjectDecl::polygon(&["A", "B", "C", "D"]))
        .with_relation(Relation::FixedLength(seg("A", "B"), 1.0))
        .with_relation(Relation::FixedLength(seg("B", "C"), 1.0))
        .with_relation(Relation::FixedLength(seg("C", "D"), 1.0))
        .with_relation(Relation::FixedLength(seg("D", "A"), 1.0))
        .with_relation(Relation::Perpendicular(seg("A", "B"), seg("B", "C")))
        .with_relation(Relation::Perpendicular(seg("C", "D"), seg("D", "A")));
    let h = 3f64.sqrt();
    let equilateral = LogicForm::new()
        .with_point("A", 0.0, 0.0)
        .with_point("B", 2.0, 0.0)
        .with_point("C", 1.0, h)
        .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
        .with_relation(Relation::FixedLength(seg("A", "B"), 2.0))
        .with_relation(Relation::FixedLength(seg("B", "C"), 2.0))
        .with_relation(Relation::FixedLength(seg("C", "A"), 2.0));
    let right = LogicForm::new()
        .with_point("A", 0.0, 0.0)
        .with_point("B", 3.0, 0.0)
        .with_point("C", 0.0, 4.0)
        .with_object(ObjectDecl::polygon(&["A", "B", "C"]))
        .with_relation(Relation::FixedLength(seg("A", "B"), 3.0))
        .with_relation(Relation::FixedLength(seg("A", "C"), 4.0))
        .with_relation(Relation::Perpendicular(seg("A", "B"), seg("A", "C")));
    let on_circle = |p: &str| Relation::PointOnCircle { point: p.into(), center: "O".into() };
    let circle = LogicForm::new()
        .with_point("O", 0.0, 0.0)
        .with_point("P", 2.0, 0.0)
        .with_point("Q", 0.0, 2.0)
        .with_point("R", -1.2, -1.6)
        .with_object(ObjectDecl::circle("O", 2.0))
        .with_relation(on_circle("P"))
        .with_relation(on_circle("Q"))
        .with_relation(on_circle("R"));
    let mid = |m: &str, a: &str, b: &str| Relation::Midpoint { point: m.into(), segment: seg(a, b) };
    let chain = LogicForm::new()
        .with_point("A", 0.0, 0.0)
        .with_point("B", 4.0, 0.0)
        .with_point("M", 2.0, 0.0)
        .with_point("N", 1.0, 0.0)
        .with_point("K", 3.0, 0.0)
        .with_line("A", "B")
        .with_relation(Relation::FixedLength(seg("A", "B"), 4.0))
        .with_relation(mid("M", "A", "B"))
        .with_relation(mid("N", "A", "M"))
        .with_relation(mid("K", "M", "B"));
    vec![
        ("square", square),
        ("equilateral", equilateral),
        ("right triangle", right),
        ("circle", circle),
        ("midpoint chain", chain),
    ]
}

fn solver_repair() -> Verdict {
    let started = Instant::now();
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for (k, (name, lf)) in repair_configs().into_iter().enumerate() {
        assert!(oracle_error(&lf) < 1e-20, "{name} must start consistent");
        let mut ok = 0;
        for seed in 0..100u64 {
            let broken = perturb(&lf, &mut rng(1000 * k as u64 + seed), 0.05);
            let Ok((out, report)) = solve(&broken, &BTreeSet::new()) else { continue };
            if report.iterations <= 500 && oracle_error(&out) < 1e-10 {
                ok += 1;
            }
        }
        summary.push(format!("{name} {ok}/100"));
        if ok < 95 {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        return Err(format!("below 95%: {}", summary.join(", ")));
    }
    within(Duration::from_secs(30), started, summary.join(", "))
}

fn round_trip() -> Verdict {
    let mut rng = rng(4);
    let style = RenderStyle::default();
    for i in 0..50 {
        let n = rng.gen_range(1..=8);
        let k = if n >= 3 { rng.gen_range(0..=4) } else { 0 };
        let mut lf = random_form(&mut rng, n, 20.0, k);
        if i % 5 == 0 {
            lf = lf.with_annotation("goal", "angle_value(A B C)");
        }
        let text = serialize_logic_form(&lf);
        let back = parse_logic_form(&text).map_err(|e| format!("form {i}: {e}"))?;
        if serialize_logic_form(&back) != text {
            return Err(format!("form {i}: reserialization differs"));
        }
        if !diff_forms(&lf, &back, 1e-9).is_empty() || back.relations.len() != lf.relations.len() || back.annotations != lf.annotations {
            return Err(format!("form {i}: parsed form differs from the original"));
        }
        for (a, b) in lf.relations.iter().zip(&back.relations) {
            let close = match (a.value(), b.value()) {
                (Some(x), Some(y)) => (x - y).abs() <= 5e-9 * x.abs(),
                (x, y) => x == y,
            };
            if a.kind() != b.kind() || a.labels() != b.labels() || !close {
                return Err(format!("form {i}: relation {a} came back as {b}"));
            }
        }
        let svg = render_svg(&lf, &style).map_err(|e| e.to_string())?;
        if render_svg(&lf, &style).unwrap() != svg || render_svg(&back, &style).unwrap() != render_svg(&back, &style).unwrap() {
            return Err(format!("form {i}: rendering is not deterministic"));
        }
    }
    Ok("50 forms round-trip; renders byte-identical".into())
}

fn executor_soundness() -> Verdict {
    let mut rng = rng(5);
    let (mut executed, mut rejected) = (0, 0);
    for seq in 0..300 {
        let n = rng.gen_range(2..=5);
        let mut lf = random_form(&mut rng, n, 3.0, 0);
        let len = rng.gen_range(1..=20);
        for step in 0..len {
            let action = random_action(&mut rng, &lf, step);
            match execute(&lf, &action) {
                Ok(res) => {
                    let v = validate(&res.next_form);
                    if !v.is_empty() {
                        return Err(format!("sequence {seq} step {step}: {action} produced {v:?}"));
                    }
                    lf = res.next_form;
                    executed += 1;
                }
                Err(_) => rejected += 1,
            }
        }
    }

    let tri = LogicForm::new()
        .with_point("A", 4.0, 1.0)
        .with_point("B", 1.0, 1.0)
        .with_point("C", 2.0, 5.0)
        .with_object(ObjectDecl::polygon(&["A", "B", "C"]));
    let turn = Action::Rotate { object: "triangle_ABC".into(), center: "B".into(), degrees: 90.0 };
    let out = execute(&tri, &turn).map_err(|e| e.to_string())?.next_form;
    let (a, b, a2) = (out.pos("A").unwrap(), out.pos("B").unwrap(), out.pos("A'").ok_or("no A'")?);
    let angle = oracle_angle(a, b, a2);
    let stretch = (a.distance(b) - a2.distance(b)).abs();
    if (angle - 90.0).abs() > 1e-9 || stretch > 1e-9 {
        return Err(format!("angle A-B-A' = {angle}, |BA| - |BA'| = {stretch:e}"));
    }
    Ok(format!("{executed} actions applied ({rejected} rejected), all valid; angle A-B-A' = 90 within {:.1e}", (angle - 90.0).abs()))
}

fn replay_frames(t: &Trajectory) -> bool {
    let mut cur = t.frames[0].clone();
    for (k, step) in t.steps.iter().enumerate() {
        let Ok(res) = execute(&cur, &step.action) else { return false };
        cur = res.next_form;
        if serialize_logic_form(&cur) != serialize_logic_form(&t.frames[k + 1]) {
            return false;
        }
    }
    t.frames.len() == t.steps.len() + 1
}

fn loop_replay() -> Verdict {
    let problems = load_problems(&fixture("gold_trajectories.jsonl")).map_err(|e| e.to_string())?;
    if problems.len() != 10 {
        return Err(format!("expected 10 gold trajectories, found {}", problems.len()));
    }
    for p in &problems {
        let proof = p.gold_proof.as_deref().ok_or(format!("{} has no gold proof", p.id))?;
        let mut r = ScriptedReasoner::from_outputs(proof);
        let t = run_episode(p, &mut r, DEFAULT_MAX_STEPS);
        let (f, res) = (r_format(&t), r_result(t.terminal_answer.as_ref(), p));
        if f != 1 || res != 1 || !replay_frames(&t) {
            return Err(format!("{}: r_format {f}, r_result {res}, failure {:?}", p.id, t.failure));
        }
    }
    Ok("10/10 with r_format = 1, r_result = 1, frame chain bit-exact".into())
}

fn prover_desk_set() -> Verdict {
    let started = Instant::now();
    let problems = load_problems(&fixture("desk_set.jsonl")).map_err(|e| e.to_string())?;
    let mut solved = Vec::new();
    let mut unsolved = Vec::new();
    for p in &problems {
        let first = &p.initial_form;
        let goal = parse_goal(first.goal().ok_or("desk problem without goal")?).map_err(|e| e.to_string())?;
        let d0 = Diagram::new(first);
        if goal.answer(&d0, &derive_facts(first, &FactSet::new(), RuleSet::all())).is_some() {
            return Err(format!("{} is settled without any construction", p.id));
        }
        let t = run_episode(p, &mut RuleReasoner::default(), DEFAULT_MAX_STEPS);
        if r_result(t.terminal_answer.as_ref(), p) != 1 {
            unsolved.push(p.id.as_str());
            continue;
        }
        let last = t.frames.last().unwrap();
        let facts = derive_facts(last, &FactSet::new(), RuleSet::all());
        let issues = audit(last, &facts);
        if !issues.is_empty() {
            return Err(format!("{}: provenance issues {issues:?}", p.id));
        }
        solved.push(p.id.as_str());
    }
    if solved.len() < 5 {
        return Err(format!("solved {}/8; unsolved {unsolved:?}", solved.len()));
    }
    within(
        Duration::from_secs(60),
        started,
        format!("solved {}/{}, provenance audited clean; unsolved {unsolved:?}", solved.len(), problems.len()),
    )
}

fn reward_semantics() -> Verdict {
    let form = LogicForm::new().with_point("A", 0.0, 0.0).with_point("B", 1.0, 0.0);
    let problem = |gold: AnswerValue| Problem {
        id: "r".into(),
        text: String::new(),
        initial_form: form.clone(),
        answer_type: gold.answer_type(),
        gold_answer: gold,
        aliases: vec![],
        gold_proof: None,
    };
    let t = |failure: Option<FailureKind>| Trajectory {
        problem_id: "r".into(),
        frames: vec![form.clone()],
        steps: vec![],
        terminal_answer: None,
        truncated: false,
        failure: failure.map(|kind| Failure { step: 0, kind, message: String::new(), raw: None }),
    };
    let checks = [
        ("valid trajectory", r_format(&t(None)), 1),
        ("malformed step", r_format(&t(Some(FailureKind::Protocol))), 0),
        ("inapplicable action", r_format(&t(Some(FailureKind::Execution))), 0),
        ("2:1 vs 2:1", r_result(Some(&AnswerValue::parse_ratio("2:1").unwrap()), &problem(AnswerValue::parse_ratio("2:1").unwrap())), 1),
        ("4/2 vs 2:1", r_result(Some(&AnswerValue::parse_ratio("4/2").unwrap()), &problem(AnswerValue::parse_ratio("2:1").unwrap())), 1),
        ("1:3 vs 1/3", r_result(Some(&AnswerValue::parse_ratio("1:3").unwrap()), &problem(AnswerValue::parse_ratio("1/3").unwrap())), 1),
        ("3:1 vs 1/3", r_result(Some(&AnswerValue::parse_ratio("3:1").unwrap()), &problem(AnswerValue::parse_ratio("1/3").unwrap())), 0),
        ("30 vs 30 degrees", r_result(Some(&AnswerValue::number(30.0)), &problem(AnswerValue::degrees(30.0))), 1),
        ("31 vs 30 degrees", r_result(Some(&AnswerValue::number(31.0)), &problem(AnswerValue::degrees(30.0))), 0),
        ("no answer", r_result(None, &problem(AnswerValue::degrees(30.0))), 0),
        (
            "scalene vs isosceles right triangle",
            r_result(Some(&AnswerValue::Descriptor("scalene".into())), &problem(AnswerValue::Descriptor("isosceles right triangle".into()))),
            0,
        ),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(format!("{name}: got {got}, want {want}"));
        }
    }
    Ok(format!("{} binary reward cases pinned", checks.len()))
}

fn statistics_fidelity() -> Verdict {
    let counts = stats_file(&fixture("composition.jsonl")).map_err(|e| e.to_string())?;
    let got = [AnswerType::Numerical, AnswerType::Ratio, AnswerType::Descriptor].map(|t| counts[&t]);
    if got != [201, 108, 81] {
        return Err(format!("counts {got:?}"));
    }
    Ok("Numerical 201, Ratio 108, Descriptor 81".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("transform laws", transform_laws),
        ("gradient oracle", gradient_oracle),
        ("solver repair", solver_repair),
        ("round-trip", round_trip),
        ("executor soundness", executor_soundness),
        ("loop replay", loop_replay),
        ("rule prover desk set", prover_desk_set),
        ("reward semantics", reward_semantics),
        ("statistics fidelity", statistics_fidelity),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
