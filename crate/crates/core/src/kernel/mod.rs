//! Stateful code execution behind a line protocol.

pub mod client;
pub mod protocol;
pub mod sim;
pub mod transport;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use client::{ExecOutcome, KernelError, KernelSession, StatusOutcome, TableStatus};

pub const DEFAULT_CELL_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelCommand {
    /// Built-in simulated kernel on a worker thread.
    Sim,
    /// External program speaking the protocol on stdin/stdout.
    Program { path: PathBuf, #[serde(default)] args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub command: KernelCommand,
    pub cell_timeout: Duration,
    pub handshake_timeout: Duration,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            command: KernelCommand::Sim,
            cell_timeout: DEFAULT_CELL_TIMEOUT,
            handshake_timeout: Duration::from_secs(10),
        }
    }
}
