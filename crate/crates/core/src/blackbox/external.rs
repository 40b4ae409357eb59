//! Adapter for models running in another process.
//!
//! The child speaks line-delimited JSON over its standard streams. Its first
//! output line is a handshake:
//!
//! ```text
//! {"labels": ["negative", "positive"], "max_in_flight": 4}
//! ```
//!
//! after which every request line `{"id": 7, "text": "..."}` is answered by
//! one response line `{"id": 7, "scores": [0.2, 0.8], "labels": [...]}`.
//! Responses may arrive in any order; at most `max_in_flight` requests are
//! outstanding at a time.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BlackBox, ScoreVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub labels: Vec<String>,
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub scores: Vec<f64>,
    pub labels: Vec<String>,
}

#[derive(Debug)]
struct Connection {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    broken: bool,
}

impl Connection {
    fn read_line(&self, timeout: Duration) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Protocol(format!("reading adapter output: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Protocol("adapter closed its output".into()))
            }
        }
    }
}

#[derive(Debug)]
pub struct ExternalModel {
    command: Vec<String>,
    labels: Vec<String>,
    max_in_flight: usize,
    timeout: Duration,
    conn: Mutex<Connection>,
}

impl ExternalModel {
    /// Starts `program` and reads its handshake. `timeout` bounds the wait
    /// for every line the adapter owes us.
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::io(program, e))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let conn = Connection {
            child,
            stdin,
            lines: rx,
            next_id: 0,
            broken: false,
        };
        let line = conn.read_line(timeout)?;
        let handshake: Handshake = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("bad handshake {line:?}: {e}")))?;
        if handshake.labels.len() < 2 {
            return Err(Error::Protocol("handshake declares fewer than two labels".into()));
        }
        let mut command = vec![program.to_string()];
        command.extend(args.iter().cloned());
        Ok(ExternalModel {
            command,
            labels: handshake.labels,
            max_in_flight: handshake.max_in_flight.max(1),
            timeout,
            conn: Mutex::new(conn),
        })
    }

    pub fn command_line(&self) -> String {
        self.command.join(" ")
    }

    fn exchange(&self, conn: &mut Connection, texts: &[String]) -> Result<Vec<ScoreVector>> {
        let mut results: Vec<Option<ScoreVector>> = vec![None; texts.len()];
        let mut pending: HashMap<u64, usize> = HashMap::new();
        let mut next = 0;
        let mut done = 0;
        while done < texts.len() {
            while pending.len() < self.max_in_flight && next < texts.len() {
                let id = conn.next_id;
                conn.next_id += 1;
                let line = serde_json::to_string(&Request {
                    id,
                    text: texts[next].clone(),
                })?;
                writeln!(conn.stdin, "{line}")
                    .and_then(|_| conn.stdin.flush())
                    .map_err(|e| Error::Protocol(format!("writing request: {e}")))?;
                pending.insert(id, next);
                next += 1;
            }
            let line = conn.read_line(self.timeout)?;
            let response: Response = serde_json::from_str(&line)
                .map_err(|e| Error::Protocol(format!("bad response {line:?}: {e}")))?;
            let index = pending
                .remove(&response.id)
                .ok_or_else(|| Error::Protocol(format!("unexpected response id {}", response.id)))?;
            let wrap = |source: Error| Error::Batch {
                index,
                source: Box::new(source),
            };
            if response.labels != self.labels {
                return Err(wrap(Error::Protocol(format!(
                    "labels {:?} differ from handshake {:?}",
                    response.labels, self.labels
                ))));
            }
            results[index] = Some(ScoreVector::new(response.scores, response.labels).map_err(wrap)?);
            done += 1;
        }
        Ok(results.into_iter().map(|r| r.expect("every slot filled")).collect())
    }
}

impl BlackBox for ExternalModel {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn predict(&self, text: &str) -> Result<ScoreVector> {
        let mut out = self.predict_batch(&[text.to_string()])?;
        Ok(out.remove(0))
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<ScoreVector>> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if conn.broken {
            return Err(Error::Protocol("connection is unusable after an earlier failure".into()));
        }
        let out = self.exchange(&mut conn, texts);
        if out.is_err() {
            conn.broken = true;
        }
        out
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = conn.child.kill();
        let _ = conn.child.wait();
    }
}

/// Serves `model` over the adapter protocol until `input` is exhausted.
pub fn serve<M: BlackBox + ?Sized>(
    model: &M,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<()> {
    let io = |e| Error::Protocol(format!("adapter stream: {e}"));
    let handshake = Handshake {
        labels: model.labels().to_vec(),
        max_in_flight: 1,
    };
    writeln!(output, "{}", serde_json::to_string(&handshake)?).map_err(io)?;
    output.flush().map_err(io)?;
    for line in input.lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)?;
        let scores = model.predict(&request.text)?;
        let response = Response {
            id: request.id,
            scores: scores.scores,
            labels: scores.labels,
        };
        writeln!(output, "{}", serde_json::to_string(&response)?).map_err(io)?;
        output.flush().map_err(io)?;
    }
    Ok(())
}
