//! Line transports to a kernel: a child process or an in-process thread.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::sim::{Action, SimKernel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// The kernel went away (process exit or closed pipe).
    Closed,
    Timeout,
    Io(String),
}

pub trait Transport: Send {
    fn send(&mut self, line: &str) -> Result<(), TransportError>;
    fn recv(&mut self, timeout: Duration) -> Result<String, TransportError>;
    /// Terminates the kernel. Idempotent.
    fn kill(&mut self);
}

fn recv_line(rx: &Receiver<String>, timeout: Duration) -> Result<String, TransportError> {
    rx.recv_timeout(timeout).map_err(|e| match e {
        RecvTimeoutError::Timeout => TransportError::Timeout,
        RecvTimeoutError::Disconnected => TransportError::Closed,
    })
}

pub struct ProcessTransport {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
}

impl ProcessTransport {
    /// Spawns `program` with a scrubbed environment and null stderr.
    pub fn spawn(program: &Path, args: &[String]) -> std::io::Result<Self> {
        let mut cmd = Command::new(program);
        cmd.args(args)
            .env_clear()
            .env("LANG", "C.UTF-8")
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONIOENCODING", "utf-8")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        if let Some(path) = std::env::var_os("PATH") {
            cmd.env("PATH", path);
        }
        let mut child = cmd.spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ProcessTransport { child, stdin, lines: rx })
    }
}

impl Transport for ProcessTransport {
    fn send(&mut self, line: &str) -> Result<(), TransportError> {
        let stdin = self.stdin.as_mut().ok_or(TransportError::Closed)?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::BrokenPipe => TransportError::Closed,
                _ => TransportError::Io(e.to_string()),
            })
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, TransportError> {
        recv_line(&self.lines, timeout)
    }

    fn kill(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ProcessTransport {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Runs a [`SimKernel`] on a worker thread.
pub struct InProcessTransport {
    requests: Option<Sender<String>>,
    replies: Receiver<String>,
    cancel: Arc<AtomicBool>,
}

impl InProcessTransport {
    pub fn spawn() -> Self {
        let (req_tx, req_rx) = mpsc::channel::<String>();
        let (rep_tx, rep_rx) = mpsc::channel::<String>();
        let cancel = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&cancel);
        thread::spawn(move || {
            let mut kernel = SimKernel::new(Some(flag));
            while let Ok(line) = req_rx.recv() {
                match kernel.handle_line(&line) {
                    Action::Reply(r) => {
                        if rep_tx.send(r).is_err() {
                            break;
                        }
                    }
                    Action::Exit(_) => break,
                    Action::Shutdown(r) => {
                        let _ = rep_tx.send(r);
                        break;
                    }
                }
            }
        });
        InProcessTransport { requests: Some(req_tx), replies: rep_rx, cancel }
    }
}

impl Transport for InProcessTransport {
    fn send(&mut self, line: &str) -> Result<(), TransportError> {
        let tx = self.requests.as_ref().ok_or(TransportError::Closed)?;
        tx.send(line.to_string()).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, TransportError> {
        recv_line(&self.replies, timeout)
    }

    fn kill(&mut self) {
        self.cancel.store(true, Ordering::Relaxed);
        self.requests = None;
    }
}

impl Drop for InProcessTransport {
    fn drop(&mut self) {
        self.kill();
    }
}
