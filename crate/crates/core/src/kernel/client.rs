//! Client side of the kernel protocol.

use std::time::Duration;

use thiserror::Error;

use super::protocol::{CellId, Request, Response, PROTOCOL_VERSION};
use super::transport::{InProcessTransport, ProcessTransport, Transport, TransportError};
use super::{KernelCommand, KernelConfig};
use crate::codegen::{CodeBase, CodeCell};
use crate::stages::StageId;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("cannot start kernel {path}: {message}")]
    Spawn { path: String, message: String },
    #[error("kernel protocol violation: {0}")]
    Protocol(String),
    #[error("kernel unavailable: {0}")]
    Unavailable(String),
    #[error("replay of accepted cell {cell_id} failed: {error}")]
    NonDeterminism { cell_id: String, error: String },
    #[error("stage {0} printed nothing")]
    EmptyOutput(StageId),
}

/// Result of one cell. `result` carries the formatted error on failure;
/// timeouts and kernel deaths are reported here too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub stdout: String,
    pub stderr: String,
    pub result: Result<(), String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableStatus {
    pub markdown: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatusOutcome {
    Ready(TableStatus),
    Missing(String),
}

pub fn cell_id(cell: &CodeCell) -> CellId {
    CellId { stage: cell.stage, operation: cell.operation_index.unwrap_or(0), attempt: cell.attempt }
}

pub struct KernelSession {
    config: KernelConfig,
    transport: Box<dyn Transport>,
    needs_restart: bool,
    restarts: u32,
}

impl KernelSession {
    pub fn start(config: KernelConfig) -> Result<Self, KernelError> {
        let transport = open(&config)?;
        let mut session = KernelSession { config, transport, needs_restart: false, restarts: 0 };
        session.hello()?;
        Ok(session)
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn restarts(&self) -> u32 {
        self.restarts
    }

    fn hello(&mut self) -> Result<(), KernelError> {
        let timeout = self.config.handshake_timeout;
        let reply = self.request(&Request::Hello { protocol_version: PROTOCOL_VERSION }, timeout)?;
        match reply.protocol_version {
            Some(PROTOCOL_VERSION) if reply.ok => Ok(()),
            _ => Err(KernelError::Protocol(format!(
                "handshake rejected: {}",
                reply.error.unwrap_or_else(|| "version mismatch".into())
            ))),
        }
    }

    fn request(&mut self, req: &Request, timeout: Duration) -> Result<Response, KernelError> {
        let line = serde_json::to_string(req).expect("request serializes");
        self.transport.send(&line).map_err(|e| self.lost(e))?;
        let reply = self.transport.recv(timeout).map_err(|e| self.lost(e))?;
        serde_json::from_str(&reply).map_err(|e| KernelError::Protocol(format!("bad reply {reply:?}: {e}")))
    }

    fn lost(&mut self, e: TransportError) -> KernelError {
        self.needs_restart = true;
        KernelError::Unavailable(match e {
            TransportError::Closed => "kernel process terminated".into(),
            TransportError::Timeout => "no reply in time".into(),
            TransportError::Io(m) => m,
        })
    }

    /// Runs one cell (header plus source). A timeout kills the kernel; the
    /// caller is expected to roll back afterwards.
    pub fn execute_cell(&mut self, cell: &CodeCell) -> Result<ExecOutcome, KernelError> {
        if self.needs_restart {
            return Err(KernelError::Unavailable("kernel must be restarted before executing".into()));
        }
        let req = Request::Exec { cell_id: cell_id(cell).to_string(), code: cell.text() };
        let line = serde_json::to_string(&req).expect("request serializes");
        let failed = |msg: &str| ExecOutcome { stdout: String::new(), stderr: String::new(), result: Err(msg.to_string()) };
        match self.transport.send(&line) {
            Ok(()) => {}
            Err(TransportError::Closed) => {
                self.needs_restart = true;
                return Ok(failed("kernel process terminated unexpectedly"));
            }
            Err(e) => return Err(self.lost(e)),
        }
        let reply = match self.transport.recv(self.config.cell_timeout) {
            Ok(r) => r,
            Err(TransportError::Timeout) => {
                self.transport.kill();
                self.needs_restart = true;
                return Ok(failed(&format!(
                    "execution timeout after {} s",
                    self.config.cell_timeout.as_secs_f64()
                )));
            }
            Err(TransportError::Closed) => {
                self.needs_restart = true;
                return Ok(failed("kernel process terminated unexpectedly"));
            }
            Err(e) => return Err(self.lost(e)),
        };
        let reply: Response = serde_json::from_str(&reply)
            .map_err(|e| KernelError::Protocol(format!("bad exec reply {reply:?}: {e}")))?;
        if reply.stdout.is_none() && !reply.ok {
            return Err(KernelError::Protocol(reply.error.unwrap_or_else(|| "exec refused".into())));
        }
        Ok(ExecOutcome {
            stdout: reply.stdout.unwrap_or_default(),
            stderr: reply.stderr.unwrap_or_default(),
            result: if reply.ok { Ok(()) } else { Err(reply.error.unwrap_or_else(|| "unknown error".into())) },
        })
    }

    /// Discards kernel state and re-executes the accepted cells in order.
    pub fn restart_and_replay(&mut self, code_base: &CodeBase) -> Result<(), KernelError> {
        self.transport.kill();
        self.transport = open(&self.config)?;
        self.needs_restart = false;
        self.restarts += 1;
        self.hello()?;
        for cell in code_base.cells() {
            let outcome = self.execute_cell(cell)?;
            if let Err(error) = outcome.result {
                return Err(KernelError::NonDeterminism { cell_id: cell_id(cell).to_string(), error });
            }
        }
        Ok(())
    }

    pub fn current_table_status(&mut self) -> Result<StatusOutcome, KernelError> {
        let reply = self.request(&Request::Status, self.config.cell_timeout)?;
        match (reply.ok, reply.markdown, reply.digest) {
            (true, Some(markdown), Some(digest)) => Ok(StatusOutcome::Ready(TableStatus { markdown, digest })),
            (false, _, _) => Ok(StatusOutcome::Missing(reply.error.unwrap_or_else(|| "table object missing".into()))),
            _ => Err(KernelError::Protocol("status reply without markdown or digest".into())),
        }
    }

    /// Printed output of the stage's accepted cells, trailing newlines trimmed.
    pub fn program_output(&mut self, stage: StageId) -> Result<String, KernelError> {
        let reply = self.request(&Request::Output { stage: stage.to_string() }, self.config.cell_timeout)?;
        if !reply.ok {
            return Err(KernelError::Protocol(reply.error.unwrap_or_else(|| "output refused".into())));
        }
        let text = reply.text.unwrap_or_default().trim_end_matches(['\n', '\r']).to_string();
        if text.trim().is_empty() {
            return Err(KernelError::EmptyOutput(stage));
        }
        Ok(text)
    }

    pub fn shutdown(mut self) {
        let line = serde_json::to_string(&Request::Shutdown).expect("request serializes");
        if self.transport.send(&line).is_ok() {
            let _ = self.transport.recv(Duration::from_secs(1));
        }
        self.transport.kill();
    }
}

fn open(config: &KernelConfig) -> Result<Box<dyn Transport>, KernelError> {
    Ok(match &config.command {
        KernelCommand::Sim => Box::new(InProcessTransport::spawn()),
        KernelCommand::Program { path, args } => Box::new(ProcessTransport::spawn(path, args).map_err(|e| {
            KernelError::Spawn { path: path.display().to_string(), message: e.to_string() }
        })?),
    })
}
