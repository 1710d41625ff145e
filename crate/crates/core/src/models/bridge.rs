//! Client side of the model bridge: spawns the bridge process and talks to
//! it over stdin/stdout, one request in flight at a time.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{Request, Response, WireInput, PROTOCOL_VERSION};
use super::{BlackBox, ModelError, ModelHandle, ScoreQuery};

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(30);

/// Environment variable overriding [`DEFAULT_HANDSHAKE_TIMEOUT`], in seconds.
pub const TIMEOUT_ENV: &str = "RLE_BRIDGE_TIMEOUT_SECS";

pub fn handshake_timeout_from_env() -> Duration {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s > 0.0)
        .map(Duration::from_secs_f64)
        .unwrap_or(DEFAULT_HANDSHAKE_TIMEOUT)
}

pub struct BridgeClient {
    command: String,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    modalities: Vec<String>,
}

/// Starts `command` (split with shell quoting rules) and completes the
/// handshake within `timeout`.
pub fn spawn_bridge(command: &str, timeout: Duration) -> Result<ModelHandle, ModelError> {
    BridgeClient::spawn(command, timeout).map(ModelHandle::bridge)
}

impl BridgeClient {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ModelError> {
        let spawn_failed = |reason: String| ModelError::SpawnFailed {
            command: command.to_owned(),
            reason,
        };
        let argv = shlex::split(command).ok_or_else(|| spawn_failed("unbalanced quotes".into()))?;
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| spawn_failed("empty command".into()))?;

        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| spawn_failed(e.to_string()))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let mut client = Self {
            command: command.to_owned(),
            child,
            stdin,
            lines: rx,
            next_id: 0,
            modalities: Vec::new(),
        };
        client.handshake(timeout)?;
        Ok(client)
    }

    fn handshake(&mut self, timeout: Duration) -> Result<(), ModelError> {
        self.send(&Request::Hello {
            protocol: PROTOCOL_VERSION,
        })?;
        let line = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(ModelError::ModelUnavailable(e.to_string())),
            Err(RecvTimeoutError::Timeout) => return Err(ModelError::HandshakeTimeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ModelError::ModelUnavailable(format!(
                    "`{}` exited before the handshake",
                    self.command
                )))
            }
        };
        match Response::parse(&line)? {
            Response::Ready {
                protocol,
                modalities,
            } if protocol == PROTOCOL_VERSION => {
                self.modalities = modalities;
                Ok(())
            }
            Response::Ready { protocol, .. } => Err(ModelError::ProtocolError(format!(
                "bridge speaks protocol {protocol}, expected {PROTOCOL_VERSION}"
            ))),
            other => Err(ModelError::ProtocolError(format!(
                "expected ready message, got {other:?}"
            ))),
        }
    }

    /// Modalities announced during the handshake.
    pub fn modalities(&self) -> &[String] {
        &self.modalities
    }

    fn send(&mut self, request: &Request) -> Result<(), ModelError> {
        self.stdin
            .write_all(request.to_line().as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| ModelError::ModelUnavailable(format!("write to bridge failed: {e}")))
    }

    fn receive(&mut self) -> Result<Response, ModelError> {
        match self.lines.recv() {
            Ok(Ok(line)) => Response::parse(&line),
            Ok(Err(e)) => Err(ModelError::ModelUnavailable(e.to_string())),
            Err(_) => Err(ModelError::ModelUnavailable(format!(
                "`{}` closed its output",
                self.command
            ))),
        }
    }
}

impl BlackBox for BridgeClient {
    fn score(
        &mut self,
        queries: &[ScoreQuery<'_>],
        target_class: usize,
    ) -> Result<Vec<f64>, ModelError> {
        let modality = queries[0].input.modality();
        if !self.modalities.is_empty() && !self.modalities.iter().any(|m| m == modality.as_str()) {
            return Err(ModelError::InvalidInput(format!(
                "bridge does not accept {} inputs",
                modality.as_str()
            )));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request::Score {
            id,
            modality,
            target_class,
            inputs: queries.iter().map(|q| WireInput::encode(q.input)).collect(),
        })?;
        match self.receive()? {
            Response::Scores { id: got, scores } if got == id => {
                Ok(scores.into_iter().map(|s| s.unwrap_or(f64::NAN)).collect())
            }
            Response::Scores { id: got, .. } => Err(ModelError::ProtocolError(format!(
                "response id {got} does not match request id {id}"
            ))),
            Response::Error { message, .. } => Err(ModelError::ProtocolError(message)),
            Response::Ready { .. } => Err(ModelError::ProtocolError(
                "unexpected ready message".into(),
            )),
        }
    }

    fn describe(&self) -> String {
        format!("bridge:{}", self.command)
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
