use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use sketchproof::action::{execute, parse_action};
use sketchproof::canonical;
use sketchproof::correction::{auto_correct, DEFAULT_ROUNDS};
use sketchproof::harness::{
    load_problems, rewards, run_episode_with, score_benchmark, stats, Problem, DEFAULT_MAX_STEPS,
};
use sketchproof::logic_form::{parse_logic_form, serialize_logic_form, LogicForm};
use sketchproof::reasoner::external::{Endpoint, ExternalReasoner};
use sketchproof::reasoner::{Reasoner, RuleReasoner, ScriptedReasoner};
use sketchproof::render::{render_svg, render_trajectory, RenderStyle};

#[derive(Parser)]
#[command(name = "sketchproof", version, about = "Diagram logic forms, sketch actions and proof episodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a logic form as SVG.
    Render {
        form: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Repair a form so its declared relations hold; prints one solve report per round.
    Fix {
        form: PathBuf,
        /// Points held fixed, comma separated.
        #[arg(long, value_delimiter = ',')]
        pin: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: usize,
        /// Where to write the repaired form (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply one action to a form and print the resulting form.
    Exec {
        form: PathBuf,
        /// Action JSON, or a path to a file holding it.
        action: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one problem through a reasoner.
    Solve {
        problem: PathBuf,
        /// scripted:<file> | gold | rules | http:<url> | pipe:<command>
        #[arg(long)]
        reasoner: String,
        /// Problem id, when the file holds several.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Directory for per-step SVGs and the trajectory JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a reasoner over a problem file.
    Bench {
        problems: PathBuf,
        #[arg(long)]
        reasoner: String,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Print the full report as JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Count problems by answer type.
    Stats { problems: PathBuf },
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_form(path: &Path) -> anyhow::Result<LogicForm> {
    parse_logic_form(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

enum ReasonerSpec {
    Scripted(Script),
    Gold,
    Rules,
    External(Endpoint),
}

/// A script is one step list for every problem, or a map from problem id to
/// step list.
enum Script {
    Shared(Vec<Value>),
    ById(BTreeMap<String, Vec<Value>>),
}

impl ReasonerSpec {
    fn parse(spec: &str) -> Result<Self, Failure> {
        if let Some(file) = spec.strip_prefix("scripted:") {
            let text = read(Path::new(file))?;
            let script = match serde_json::from_str::<Value>(&text).context(file.to_string())? {
                Value::Array(steps) => Script::Shared(steps),
                Value::Object(m) => Script::ById(
                    m.into_iter()
                        .map(|(k, v)| match v {
                            Value::Array(steps) => Ok((k, steps)),
                            _ => Err(anyhow!("{file}: script for `{k}` must be a list of steps")),
                        })
                        .collect::<anyhow::Result<_>>()?,
                ),
                _ => return Err(anyhow!("{file}: script must be a list of steps or an object of lists").into()),
            };
            return Ok(ReasonerSpec::Scripted(script));
        }
        match spec {
            "gold" => Ok(ReasonerSpec::Gold),
            "rules" => Ok(ReasonerSpec::Rules),
            _ => Endpoint::parse(spec)
                .map(ReasonerSpec::External)
                .ok_or_else(|| Failure::Usage(format!("unknown reasoner `{spec}`"))),
        }
    }

    fn build(&self, p: &Problem) -> Box<dyn Reasoner + Send> {
        match self {
            ReasonerSpec::Scripted(Script::Shared(steps)) => Box::new(ScriptedReasoner::new(steps.clone())),
            ReasonerSpec::Scripted(Script::ById(m)) => {
                Box::new(ScriptedReasoner::new(m.get(&p.id).cloned().unwrap_or_default()))
            }
            ReasonerSpec::Gold => Box::new(ScriptedReasoner::from_outputs(
                p.gold_proof.as_deref().unwrap_or_default(),
            )),
            ReasonerSpec::Rules => Box::new(RuleReasoner::default()),
            ReasonerSpec::External(e) => Box::new(ExternalReasoner::new(e.clone())),
        }
    }
}

fn pick_problem(path: &Path, id: Option<&str>) -> anyhow::Result<Problem> {
    let mut problems = load_problems(path)?;
    match id {
        Some(id) => problems
            .into_iter()
            .find(|p| p.id == id)
            .ok_or_else(|| anyhow!("no problem `{id}` in {}", path.display())),
        None if problems.len() == 1 => Ok(problems.remove(0)),
        None => Err(anyhow!("{} holds {} problems; pick one with --id", path.display(), problems.len())),
    }
}

fn write_trace(dir: &Path, frames: &[LogicForm], trajectory: &Value) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let svgs = render_trajectory(frames, &RenderStyle::default()).context("rendering trace")?;
    for (k, svg) in svgs.iter().enumerate() {
        fs::write(dir.join(format!("step_{k:03}.svg")), svg)?;
    }
    fs::write(dir.join("trajectory.json"), canonical::to_string(trajectory))?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Render { form, output } => {
            let lf = read_form(&form)?;
            let svg = render_svg(&lf, &RenderStyle::default()).map_err(anyhow::Error::from)?;
            emit(&svg, output.as_deref())?;
        }
        Command::Fix { form, pin, rounds, output } => {
            let lf = read_form(&form)?;
            let pins: BTreeSet<String> = pin.into_iter().filter(|p| !p.is_empty()).collect();
            let fixed = auto_correct(&lf, &pins, &RenderStyle::default(), rounds).map_err(anyhow::Error::from)?;
            for r in &fixed.rounds {
                let line = canonical::to_string(&r.report.to_value());
                // the form owns stdout unless it goes to a file
                if output.is_some() {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
            emit(&serialize_logic_form(&fixed.form), output.as_deref())?;
        }
        Command::Exec { form, action, output } => {
            let lf = read_form(&form)?;
            let text = if action.trim_start().starts_with('{') {
                action
            } else {
                read(Path::new(&action))?
            };
            let action = parse_action(&text).map_err(anyhow::Error::from)?;
            let res = execute(&lf, &action).map_err(anyhow::Error::from)?;
            if let Some(a) = &res.answer {
                eprintln!("answer: {a}");
            }
            emit(&serialize_logic_form(&res.next_form), output.as_deref())?;
        }
        Command::Solve { problem, reasoner, id, max_steps, trace } => {
            let spec = ReasonerSpec::parse(&reasoner)?;
            let p = pick_problem(&problem, id.as_deref())?;
            let mut r = spec.build(&p);
            let t = run_episode_with(&p, &mut r, max_steps, &mut |k, _| eprintln!("frame {k}"));
            let rw = rewards(&t, &p);
            let mut doc = t.to_value();
            doc["r_format"] = json!(rw.r_format);
            doc["r_result"] = json!(rw.r_result);
            if let Some(dir) = &trace {
                write_trace(dir, &t.frames, &doc)?;
            }
            for (k, s) in t.steps.iter().enumerate() {
                println!("{k:>3}  {}  {}", s.action, s.reasoning);
            }
            if let Some(f) = &t.failure {
                println!("stopped at step {}: {} ({})", f.step, f.message, f.kind.as_str());
            }
            let answer = t.terminal_answer.as_ref().map_or("none".to_string(), |a| a.to_string());
            println!(
                "answer: {answer}  gold: {}  r_format: {}  r_result: {}{}",
                p.gold_answer,
                rw.r_format,
                rw.r_result,
                if t.truncated { "  (step limit)" } else { "" }
            );
        }
        Command::Bench { problems, reasoner, max_steps, json } => {
            let spec = ReasonerSpec::parse(&reasoner)?;
            let ps = load_problems(&problems).map_err(anyhow::Error::from)?;
            let report = score_benchmark(&ps, |p| spec.build(p), max_steps).map_err(anyhow::Error::from)?;
            if json {
                println!("{}", canonical::to_string(&report.to_value()));
            } else {
                println!("{report}");
            }
        }
        Command::Stats { problems } => {
            let counts = stats(&load_problems(&problems).map_err(anyhow::Error::from)?);
            for (ty, n) in &counts {
                println!("{ty:<12}{n:>6}");
            }
            println!("{:<12}{:>6}", "Total", counts.values().sum::<usize>());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
