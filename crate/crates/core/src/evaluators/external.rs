//! JSON-lines protocol to an external evaluator process.
//!
//! Each request is one line
//! `{"id": 7, "space": "transformer", "genotype": "0-1-…", "objectives": ["bleu", "latency_ms"]}`
//! and the child answers with one line `{"id": 7, "values": {"bleu": 27.1, "latency_ms": 88.0}}`.
//! A child may answer `{"id": 7, "error": "…"}` instead of `values`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EvalError, Evaluator};
use crate::objective::Objective;
use crate::space::Genotype;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRequest {
    pub id: u64,
    pub space: String,
    pub genotype: String,
    pub objectives: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReply {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<Option<String>>,
    dead: Option<String>,
}

impl Worker {
    fn exit_status(&mut self) -> String {
        for _ in 0..20 {
            if let Ok(Some(status)) = self.child.try_wait() {
                return status.to_string();
            }
            thread::sleep(Duration::from_millis(5));
        }
        "stdout closed".to_string()
    }

    fn kill(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalProcessEvaluator {
    command: String,
    space_id: String,
    objectives: Vec<Objective>,
    timeout: Duration,
    workers: Vec<Mutex<Worker>>,
    next_worker: AtomicUsize,
    next_id: AtomicU64,
}

impl ExternalProcessEvaluator {
    /// Starts `pool` copies of `program args…`.
    pub fn spawn(
        program: &str,
        args: &[String],
        space_id: &str,
        objectives: Vec<Objective>,
        timeout: Duration,
        pool: usize,
    ) -> Result<Self, EvalError> {
        let command = std::iter::once(program.to_string()).chain(args.iter().cloned()).collect::<Vec<_>>().join(" ");
        let mut workers = Vec::with_capacity(pool.max(1));
        for _ in 0..pool.max(1) {
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| EvalError::Spawn { command: command.clone(), reason: e.to_string() })?;
            let stdin = child.stdin.take();
            let stdout = child.stdout.take().expect("piped stdout");
            let (tx, rx) = mpsc::channel();
            thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    match line {
                        Ok(l) => {
                            if tx.send(Some(l)).is_err() {
                                return;
                            }
                        }
                        Err(_) => break,
                    }
                }
                let _ = tx.send(None);
            });
            workers.push(Mutex::new(Worker { child, stdin, lines: rx, dead: None }));
        }
        Ok(Self {
            command,
            space_id: space_id.to_string(),
            objectives,
            timeout,
            workers,
            next_worker: AtomicUsize::new(0),
            next_id: AtomicU64::new(1),
        })
    }

    /// Splits `command_line` on whitespace into program and arguments.
    pub fn from_command_line(
        command_line: &str,
        space_id: &str,
        objectives: Vec<Objective>,
        timeout: Duration,
        pool: usize,
    ) -> Result<Self, EvalError> {
        let mut parts = command_line.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| EvalError::Spawn {
            command: command_line.to_string(),
            reason: "empty command".into(),
        })?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args, space_id, objectives, timeout, pool)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn exchange(&self, worker: &mut Worker, request: &ProtocolRequest) -> Result<Vec<f64>, EvalError> {
        let line = serde_json::to_string(request).expect("request serializes");
        if let Some(status) = &worker.dead {
            return Err(EvalError::ChildExited { request: line, status: status.clone() });
        }
        let written = match worker.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{line}").and_then(|_| stdin.flush()).is_ok(),
            None => false,
        };
        if !written {
            let status = worker.exit_status();
            worker.dead = Some(status.clone());
            return Err(EvalError::ChildExited { request: line, status });
        }
        let reply_line = match worker.lines.recv_timeout(self.timeout) {
            Ok(Some(reply)) => reply,
            Ok(None) | Err(RecvTimeoutError::Disconnected) => {
                let status = worker.exit_status();
                worker.dead = Some(status.clone());
                return Err(EvalError::ChildExited { request: line, status });
            }
            Err(RecvTimeoutError::Timeout) => {
                worker.kill();
                worker.dead = Some("killed after timeout".into());
                return Err(EvalError::Timeout { request: line, seconds: self.timeout.as_secs_f64() });
            }
        };
        let malformed = |reason: String| EvalError::MalformedReply {
            request: line.clone(),
            reply: reply_line.clone(),
            reason,
        };
        let reply: ProtocolReply = serde_json::from_str(&reply_line).map_err(|e| malformed(e.to_string()))?;
        if reply.id != request.id {
            return Err(EvalError::IdMismatch { request: line.clone(), expected: request.id, found: reply.id });
        }
        let values = match (reply.values, reply.error) {
            (_, Some(err)) => return Err(malformed(format!("evaluator error: {err}"))),
            (Some(v), None) => v,
            (None, None) => return Err(malformed("missing `values`".into())),
        };
        self.objectives
            .iter()
            .map(|o| values.get(&o.name).copied().ok_or_else(|| malformed(format!("missing value for `{}`", o.name))))
            .collect()
    }
}

impl Evaluator for ExternalProcessEvaluator {
    fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        let request = ProtocolRequest {
            id: self.next_id.fetch_add(1, Ordering::Relaxed),
            space: self.space_id.clone(),
            genotype: genotype.to_text(),
            objectives: self.objectives.iter().map(|o| o.name.clone()).collect(),
        };
        let slot = self.next_worker.fetch_add(1, Ordering::Relaxed) % self.workers.len();
        let mut worker = self.workers[slot].lock().unwrap_or_else(|p| p.into_inner());
        self.exchange(&mut worker, &request)
    }
}

impl Drop for ExternalProcessEvaluator {
    fn drop(&mut self) {
        for w in &self.workers {
            let mut w = w.lock().unwrap_or_else(|p| p.into_inner());
            w.kill();
        }
    }
}

/// Serves an in-process evaluator over the line protocol until EOF.
pub fn serve_protocol<E, R, W>(evaluator: &E, space_id: &str, input: R, mut output: W) -> std::io::Result<()>
where
    E: Evaluator + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<ProtocolRequest>(&line) {
            Err(e) => ProtocolReply { id: 0, values: None, error: Some(format!("bad request: {e}")) },
            Ok(req) => match answer(evaluator, space_id, &req) {
                Ok(values) => ProtocolReply { id: req.id, values: Some(values), error: None },
                Err(msg) => ProtocolReply { id: req.id, values: None, error: Some(msg) },
            },
        };
        writeln!(output, "{}", serde_json::to_string(&reply).expect("reply serializes"))?;
        output.flush()?;
    }
    Ok(())
}

fn answer<E: Evaluator + ?Sized>(evaluator: &E, space_id: &str, req: &ProtocolRequest) -> Result<BTreeMap<String, f64>, String> {
    if req.space != space_id {
        return Err(format!("serving space `{space_id}`, request names `{}`", req.space));
    }
    let genotype: Genotype = req.genotype.parse().map_err(|e: crate::space::SpaceError| e.to_string())?;
    let values = evaluator.evaluate(&genotype).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for name in &req.objectives {
        let pos = evaluator
            .objectives()
            .iter()
            .position(|o| &o.name == name)
            .ok_or_else(|| format!("unknown objective `{name}`"))?;
        out.insert(name.clone(), values[pos]);
    }
    Ok(out)
}
