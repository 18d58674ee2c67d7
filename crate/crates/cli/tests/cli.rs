use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchproof")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TRIANGLE: &str = r#"{"points":[{"name":"A","x":0,"y":0},{"name":"B","x":3,"y":0},{"name":"C","x":3.1,"y":3.9}],
"objects":[{"type":"polygon","points":["A","B","C"]}],
"relations":[{"kind":"fixed_length","args":[["B","C"]],"value":4},{"kind":"perpendicular","args":[["A","B"],["B","C"]]}]}"#;

fn triangle(dir: &Path) -> PathBuf {
    let p = dir.join("tri.json");
    fs::write(&p, TRIANGLE).unwrap();
    p
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let desk = fixtures().join("desk_set.jsonl");
    let o = run(&["bench", desk.to_str().unwrap(), "--reasoner", "oracle"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown reasoner"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["render", "/no/such/form.json"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"points":[{"name":"A","x":0,"y":0}],"objects":[],"relations":[{"kind":"midpoint","args":["A",["B","C"]]}]}"#).unwrap();
    assert_eq!(run(&["render", bad.to_str().unwrap()]).status.code(), Some(2));
    let tri = triangle(dir.path());
    let o = run(&["exec", tri.to_str().unwrap(), r#"{"op":"rotate","object":"triangle_XYZ","center":"A","degrees":90}"#]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let tri = triangle(dir.path());
    let out = dir.path().join("tri.svg");
    let o = run(&["render", tri.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let svg = fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("id=\"pt-C\""));
    assert_eq!(stdout(&run(&["render", tri.to_str().unwrap()])).trim_end(), svg.trim_end());
}

#[test]
fn fix_repairs_relations() {
    let dir = tempfile::tempdir().unwrap();
    let tri = triangle(dir.path());
    let out = dir.path().join("fixed.json");
    let o = run(&["fix", tri.to_str().unwrap(), "--pin", "A,B", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let reports: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!reports.is_empty());
    assert!(reports.last().unwrap()["final_error"].as_f64().unwrap() < 1e-10);
    let fixed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let c = fixed["points"].as_array().unwrap().iter().find(|p| p["name"] == "C").unwrap();
    assert!((c["x"].as_f64().unwrap() - 3.0).abs() < 1e-4);
    assert!((c["y"].as_f64().unwrap() - 4.0).abs() < 1e-4);
}

#[test]
fn exec_applies_an_action() {
    let dir = tempfile::tempdir().unwrap();
    let tri = triangle(dir.path());
    let o = run(&["exec", tri.to_str().unwrap(), r#"{"op":"rotate","object":"triangle_ABC","center":"B","degrees":90}"#]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\"A'\"") && text.contains("\"C'\""));
}

#[test]
fn solve_with_gold_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let gold = fixtures().join("gold_trajectories.jsonl");
    let trace = dir.path().join("trace");
    let o = run(&[
        "solve",
        gold.to_str().unwrap(),
        "--reasoner",
        "gold",
        "--id",
        "g01-quarter-turn",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("r_format: 1  r_result: 1"));
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(trace.join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(t["r_result"], 1);
    let frames = t["steps"].as_array().unwrap().len() + 1;
    for k in 0..frames {
        assert!(trace.join(format!("step_{k:03}.svg")).exists());
    }
}

#[test]
fn solve_needs_an_id_for_many_problems() {
    let gold = fixtures().join("gold_trajectories.jsonl");
    assert_eq!(run(&["solve", gold.to_str().unwrap(), "--reasoner", "gold"]).status.code(), Some(2));
}

#[test]
fn bench_scores_the_gold_set() {
    let gold = fixtures().join("gold_trajectories.jsonl");
    let o = run(&["bench", gold.to_str().unwrap(), "--reasoner", "gold", "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(report["total"]["count"], 10);
    assert_eq!(report["total"]["solved"], 10);
    let table = stdout(&run(&["bench", gold.to_str().unwrap(), "--reasoner", "gold"]));
    assert!(table.contains("accuracy"));
}

#[test]
fn scripted_reasoner_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    fs::write(
        &script,
        r#"{"g07-hypotenuse":[{"reasoning":"by Pythagoras","action":{"op":"answer","value":5}}]}"#,
    )
    .unwrap();
    let gold = fixtures().join("gold_trajectories.jsonl");
    let spec = format!("scripted:{}", script.display());
    let o = run(&["solve", gold.to_str().unwrap(), "--reasoner", &spec, "--id", "g07-hypotenuse"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("r_result: 1"));
}

#[test]
fn stats_counts_answer_types() {
    let comp = fixtures().join("composition.jsonl");
    let o = run(&["stats", comp.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    for (ty, n) in [("Numerical", 201), ("Ratio", 108), ("Descriptor", 81), ("Total", 390)] {
        let line = text.lines().find(|l| l.starts_with(ty)).unwrap();
        assert_eq!(line.split_whitespace().last().unwrap(), n.to_string());
    }
}
