//! Line-delimited JSON scorer protocol over a child process's standard
//! streams. Handshake: `{"type":"hello","version":1}` / `{"type":"ready"}`;
//! requests `{"type":"score","id":...,"text":...}` are answered by
//! `{"type":"result","id":...,"loglik":...}` in any order; `{"type":"bye"}`
//! shuts the scorer down.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lm::LikelihoodScorer;

pub const PROTOCOL_VERSION: u32 = 1;
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ExternalScorerConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl ExternalScorerConfig {
    pub fn new(command: Vec<String>) -> Self {
        ExternalScorerConfig {
            command,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Request<'a> {
    Hello { version: u32 },
    Score { id: &'a str, text: &'a str },
    Bye,
}

#[derive(Deserialize)]
struct ResultLine {
    id: String,
    loglik: Value,
}

struct Transport {
    child: Child,
    // Option so shutdown can close the pipe (EOF) before reaping.
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

pub struct ExternalScorer {
    transport: Mutex<Transport>,
    timeout: Duration,
    next_id: std::sync::atomic::AtomicU64,
}

impl ExternalScorer {
    /// Spawns the scorer process and performs the hello/ready handshake.
    pub fn spawn(config: &ExternalScorerConfig) -> Result<Self> {
        if config.command.is_empty() {
            return Err(Error::Scorer("empty scorer command".to_string()));
        }
        let mut child = Command::new(&config.command[0])
            .args(&config.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Scorer(format!("failed to spawn scorer: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let scorer = ExternalScorer {
            transport: Mutex::new(Transport {
                child,
                stdin: Some(stdin),
                lines: rx,
            }),
            timeout: config.timeout,
            next_id: std::sync::atomic::AtomicU64::new(0),
        };
        {
            let mut t = scorer.transport.lock().unwrap();
            send(&mut t.stdin, &Request::Hello {
                version: PROTOCOL_VERSION,
            })?;
            let line = recv_line(&t.lines, scorer.timeout)?;
            let v: Value = serde_json::from_str(&line)
                .map_err(|e| Error::Scorer(format!("bad handshake line: {e}")))?;
            if v.get("type").and_then(Value::as_str) != Some("ready") {
                return Err(Error::Scorer(format!(
                    "expected ready, got {line:?}"
                )));
            }
        }
        Ok(scorer)
    }

    /// Scores a batch; responses may arrive in any order and are matched
    /// back to input order by request id.
    pub fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>> {
        let mut t = self.transport.lock().unwrap();
        let base = self
            .next_id
            .fetch_add(texts.len() as u64, std::sync::atomic::Ordering::Relaxed);
        let ids: Vec<String> = (0..texts.len())
            .map(|i| format!("r{}", base + i as u64))
            .collect();
        for (id, text) in ids.iter().zip(texts) {
            send(&mut t.stdin, &Request::Score { id, text })?;
        }
        let mut by_id: HashMap<String, f64> = HashMap::new();
        while by_id.len() < texts.len() {
            let line = recv_line(&t.lines, self.timeout)?;
            let res: ResultLine = serde_json::from_str(&line)
                .map_err(|e| Error::Scorer(format!("bad result line {line:?}: {e}")))?;
            let loglik = res
                .loglik
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or(Error::NonFiniteScore {
                    id: res.id.clone(),
                })?;
            if by_id.insert(res.id.clone(), loglik).is_some() {
                return Err(Error::Scorer(format!(
                    "duplicate response for id {:?}",
                    res.id
                )));
            }
        }
        ids.iter()
            .map(|id| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Scorer(format!("missing response for id {id:?}")))
            })
            .collect()
    }
}

impl LikelihoodScorer for ExternalScorer {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        Ok(self.score_batch(std::slice::from_ref(&text.to_string()))?[0])
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(mut t) = self.transport.lock() {
            let _ = send(&mut t.stdin, &Request::Bye);
            // Close the pipe so scorers that only exit on EOF do too,
            // then reap with a bounded wait before resorting to kill.
            t.stdin = None;
            for _ in 0..100 {
                match t.child.try_wait() {
                    Ok(None) => std::thread::sleep(Duration::from_millis(20)),
                    _ => return,
                }
            }
            let _ = t.child.kill();
            let _ = t.child.wait();
        }
    }
}

fn send(stdin: &mut Option<ChildStdin>, req: &Request) -> Result<()> {
    let stdin = stdin
        .as_mut()
        .ok_or_else(|| Error::Scorer("scorer input already closed".to_string()))?;
    let mut line = serde_json::to_string(req).expect("requests serialize");
    line.push('\n');
    stdin
        .write_all(line.as_bytes())
        .and_then(|_| stdin.flush())
        .map_err(|e| Error::Scorer(format!("failed to write request: {e}")))
}

fn recv_line(rx: &Receiver<std::io::Result<String>>, timeout: Duration) -> Result<String> {
    match rx.recv_timeout(timeout) {
        Ok(Ok(line)) => Ok(line),
        Ok(Err(e)) => Err(Error::Scorer(format!("read error: {e}"))),
        Err(RecvTimeoutError::Timeout) => {
            Err(Error::Scorer(format!("timeout after {timeout:?}")))
        }
        Err(RecvTimeoutError::Disconnected) => {
            Err(Error::Scorer("scorer closed its output".to_string()))
        }
    }
}
