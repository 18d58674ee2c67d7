//! Client for reasoners running outside the process.
//!
//! Each step is one request carrying the problem text, the current logic
//! form, its SVG rendering, the step history and the step index:
//!
//! ```text
//! {"problem_text": .., "logic_form": {..}, "svg": "..", "history": [..], "step_index": n}
//! ```
//!
//! The reply must be exactly `{"reasoning": .., "action": {..}}`.
//!
//! - `http:<url>`: one POST per step, JSON body, JSON reply.
//! - `pipe:<command>`: the command runs under `sh -c`; each request is one
//!   line on its stdin and each reply one line on its stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::canonical;
use crate::render::{render_svg, RenderStyle};

use super::{Reasoner, ReasonerError, ReasonerInput, StepOutput};

/// Environment variable holding the per-step timeout in seconds.
pub const TIMEOUT_ENV: &str = "SKETCHPROOF_REASONER_TIMEOUT";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Timeout from [`TIMEOUT_ENV`], else [`DEFAULT_TIMEOUT`].
pub fn timeout_from_env() -> Duration {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|s| *s > 0.0 && s.is_finite())
        .map(Duration::from_secs_f64)
        .unwrap_or(DEFAULT_TIMEOUT)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Http(String),
    Pipe(String),
}

impl Endpoint {
    /// `http:<url>` or `pipe:<command>`. A bare `http://` URL is accepted.
    pub fn parse(spec: &str) -> Option<Self> {
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Some(Endpoint::Http(spec.to_string()));
        }
        if let Some(url) = spec.strip_prefix("http:") {
            return Some(Endpoint::Http(url.to_string()));
        }
        spec.strip_prefix("pipe:")
            .filter(|c| !c.trim().is_empty())
            .map(|c| Endpoint::Pipe(c.to_string()))
    }
}

struct PipeAgent {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl PipeAgent {
    fn spawn(command: &str) -> Result<Self, ReasonerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ReasonerError::Transport(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines })
    }
}

impl Drop for PipeAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalReasoner {
    endpoint: Endpoint,
    timeout: Duration,
    style: RenderStyle,
    pipe: Option<PipeAgent>,
}

impl ExternalReasoner {
    pub fn new(endpoint: Endpoint) -> Self {
        Self {
            endpoint,
            timeout: timeout_from_env(),
            style: RenderStyle::default(),
            pipe: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn request(&self, input: &ReasonerInput) -> String {
        // an empty form cannot be drawn; the agent still gets the form itself
        let svg = render_svg(&input.current_form, &self.style).unwrap_or_default();
        canonical::to_string(&input.to_wire(&svg))
    }

    fn call_pipe(&mut self, body: &str) -> Result<String, ReasonerError> {
        let Endpoint::Pipe(command) = &self.endpoint else {
            unreachable!()
        };
        if self.pipe.is_none() {
            self.pipe = Some(PipeAgent::spawn(command)?);
        }
        let agent = self.pipe.as_mut().unwrap();
        let sent = writeln!(agent.stdin, "{body}").and_then(|_| agent.stdin.flush());
        if let Err(e) = sent {
            self.pipe = None;
            return Err(ReasonerError::Transport(format!("agent closed its input: {e}")));
        }
        match agent.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => {
                self.pipe = None;
                Err(ReasonerError::Transport(e.to_string()))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.pipe = None;
                Err(ReasonerError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.pipe = None;
                Err(ReasonerError::Transport("agent exited".into()))
            }
        }
    }
}

fn is_timeout(err: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur = Some(err);
    while let Some(e) = cur {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        cur = e.source();
    }
    false
}

fn call_http(url: &str, body: &str, timeout: Duration) -> Result<String, ReasonerError> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let started = Instant::now();
    let response = agent
        .post(url)
        .set("Content-Type", "application/json")
        .send_string(body);
    let timed_out = |e: &ureq::Error| is_timeout(e) || started.elapsed() >= timeout;
    match response {
        Ok(r) => r.into_string().map_err(|e| {
            if is_timeout(&e) {
                ReasonerError::Timeout(timeout)
            } else {
                ReasonerError::Transport(e.to_string())
            }
        }),
        Err(ureq::Error::Status(code, r)) => Err(ReasonerError::Protocol {
            raw: r.into_string().unwrap_or_default(),
            reason: format!("HTTP status {code}"),
        }),
        Err(e) if timed_out(&e) => Err(ReasonerError::Timeout(timeout)),
        Err(e) => Err(ReasonerError::Transport(e.to_string())),
    }
}

/// Send one request to `endpoint` and decode the reply strictly.
pub fn external_call(endpoint: &Endpoint, input: &ReasonerInput, timeout: Duration) -> Result<StepOutput, ReasonerError> {
    ExternalReasoner::new(endpoint.clone())
        .with_timeout(timeout)
        .next_step(input)
}

impl Reasoner for ExternalReasoner {
    fn next_step(&mut self, input: &ReasonerInput) -> Result<StepOutput, ReasonerError> {
        let body = self.request(input);
        let raw = match &self.endpoint {
            Endpoint::Http(url) => call_http(url, &body, self.timeout)?,
            Endpoint::Pipe(_) => self.call_pipe(&body)?,
        };
        StepOutput::parse(&raw).map_err(|reason| ReasonerError::Protocol { raw, reason })
    }
}
