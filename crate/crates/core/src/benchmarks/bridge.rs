//! Client for an external benchmark process speaking a line-delimited JSON
//! protocol over stdio.
//!
//! ```text
//! -> {"op": "hello"}
//! <- {"benchmark": "<name>", "version": "<str>"}
//! -> {"id": 1, "op": "evaluate", "arch": "<canonical text>"}
//! <- {"id": 1, "accuracy": 0.9312}      or {"id": 1, "error": "<msg>"}
//! ```
//!
//! One request is in flight at a time.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Benchmark;
use crate::error::{Error, Result};
use crate::search_space::{Architecture, SearchSpaceSpec};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeInfo {
    pub benchmark: String,
    pub version: String,
}

#[derive(Serialize)]
struct EvaluateRequest<'a> {
    id: u64,
    op: &'static str,
    arch: &'a str,
}

pub struct BridgeClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    next_id: u64,
    timeout: Duration,
    info: Option<BridgeInfo>,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient")
            .field("next_id", &self.next_id)
            .field("timeout", &self.timeout)
            .field("info", &self.info)
            .finish_non_exhaustive()
    }
}

impl BridgeClient {
    /// Launches `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::BridgeUnavailable(format!("cannot launch {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::from_streams(stdout, stdin, timeout);
        client.child = Some(child);
        client.handshake()?;
        Ok(client)
    }

    /// Wraps an already-connected pair of streams. No handshake is sent.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            child: None,
            next_id: 1,
            timeout,
            info: None,
        }
    }

    pub fn info(&self) -> Option<&BridgeInfo> {
        self.info.as_ref()
    }

    fn send_line(&mut self, line: &str) -> Result<()> {
        let mut buf = line.to_string();
        buf.push('\n');
        self.writer
            .write_all(buf.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::BridgeUnavailable(format!("write failed: {e}")))
    }

    fn read_line(&mut self) -> Result<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::BridgeUnavailable(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::BridgeUnavailable(format!(
                "no response within {:?}",
                self.timeout
            ))),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::BridgeUnavailable("bridge closed its output".into()))
            }
        }
    }

    pub fn handshake(&mut self) -> Result<BridgeInfo> {
        self.send_line(r#"{"op":"hello"}"#)?;
        let line = self.read_line()?;
        let info: BridgeInfo = serde_json::from_str(&line).map_err(|e| Error::Protocol {
            message: format!("bad handshake: {e}"),
            payload: line.clone(),
        })?;
        self.info = Some(info.clone());
        Ok(info)
    }

    /// Sends one architecture and waits for its accuracy.
    pub fn evaluate_text(&mut self, arch: &str) -> Result<f64> {
        let id = self.next_id;
        self.next_id += 1;
        let request = serde_json::to_string(&EvaluateRequest {
            id,
            op: "evaluate",
            arch,
        })
        .expect("request serializes");
        self.send_line(&request)?;
        let line = self.read_line()?;
        parse_evaluate_response(id, &line)
    }

    pub fn evaluate(&mut self, spec: &SearchSpaceSpec, arch: &Architecture) -> Result<f64> {
        self.evaluate_text(&arch.to_canonical_string(spec))
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn parse_evaluate_response(id: u64, line: &str) -> Result<f64> {
    let protocol = |message: &str| Error::Protocol {
        message: message.to_string(),
        payload: line.to_string(),
    };
    let value: Value = serde_json::from_str(line).map_err(|_| protocol("response is not JSON"))?;
    let obj = value.as_object().ok_or_else(|| protocol("response is not an object"))?;
    if obj.get("id").and_then(Value::as_u64) != Some(id) {
        return Err(protocol(&format!("expected response id {id}")));
    }
    if let Some(msg) = obj.get("error") {
        return Err(Error::BridgeRemote(
            msg.as_str().map(str::to_string).unwrap_or_else(|| msg.to_string()),
        ));
    }
    obj.get("accuracy")
        .and_then(Value::as_f64)
        .filter(|a| a.is_finite())
        .ok_or_else(|| protocol("missing numeric accuracy"))
}

/// A [`Benchmark`] backed by a bridge process. Calls are serialized.
#[derive(Debug)]
pub struct BridgeBenchmark {
    spec: SearchSpaceSpec,
    client: Mutex<BridgeClient>,
}

impl BridgeBenchmark {
    pub fn new(spec: &SearchSpaceSpec, client: BridgeClient) -> Self {
        Self {
            spec: spec.clone(),
            client: Mutex::new(client),
        }
    }

    pub fn spawn(spec: &SearchSpaceSpec, command: &str, timeout: Duration) -> Result<Self> {
        Ok(Self::new(spec, BridgeClient::spawn(command, timeout)?))
    }
}

impl Benchmark for BridgeBenchmark {
    fn evaluate(&self, arch: &Architecture) -> Result<f64> {
        arch.validate(&self.spec)?;
        let mut client = self.client.lock().unwrap_or_else(|p| p.into_inner());
        client.evaluate(&self.spec, arch)
    }

    fn name(&self) -> String {
        let client = self.client.lock().unwrap_or_else(|p| p.into_inner());
        match client.info() {
            Some(info) => format!("bridge({} {})", info.benchmark, info.version),
            None => "bridge".into(),
        }
    }
}

pub fn bridge_evaluate(
    arch: &Architecture,
    spec: &SearchSpaceSpec,
    client: &mut BridgeClient,
) -> Result<f64> {
    client.evaluate(spec, arch)
}

/// Serves the protocol with a constant accuracy. Used as a test double for a
/// real bridge; malformed lines get an error response with `"id": null`.
/// With `max_requests` set, exits after answering that many lines.
pub fn serve_constant<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    accuracy: f64,
    max_requests: Option<usize>,
) -> std::io::Result<()> {
    for line in input.lines().take(max_requests.unwrap_or(usize::MAX)) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => {
                let id = obj.get("id").cloned().unwrap_or(Value::Null);
                match obj.get("op").and_then(Value::as_str) {
                    Some("hello") => serde_json::json!({"benchmark": "stub", "version": "0"}),
                    Some("evaluate") if obj.get("arch").is_some_and(Value::is_string) => {
                        serde_json::json!({"id": id, "accuracy": accuracy})
                    }
                    Some("evaluate") => serde_json::json!({"id": id, "error": "missing arch"}),
                    _ => serde_json::json!({"id": id, "error": "unknown op"}),
                }
            }
            _ => serde_json::json!({"id": null, "error": "malformed request"}),
        };
        writeln!(output, "{response}")?;
        output.flush()?;
    }
    Ok(())
}
