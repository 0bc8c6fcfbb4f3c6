//! A self-contained kernel that speaks the wire protocol and interprets a
//! pandas-flavoured Python subset. Used as the default kernel and as the
//! mock for protocol tests.

pub mod interp;
pub mod parser;
pub mod value;

use std::io::{BufRead, Write};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::protocol::{cell_stage, Request, Response, PROTOCOL_VERSION};
use crate::table::Table;
use interp::{CellEnd, Interp, Value};

pub enum Action {
    Reply(String),
    /// The process ends without replying, like `os._exit`.
    Exit(i32),
    /// Reply, then stop serving.
    Shutdown(String),
}

pub struct SimKernel {
    interp: Interp,
    greeted: bool,
    /// stdout of every successful cell, keyed by cell id.
    outputs: Vec<(String, String)>,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    columns: &'a [String],
    shape: [usize; 2],
    cells: Vec<Vec<String>>,
    variables: Vec<&'a str>,
}

impl SimKernel {
    pub fn new(cancel: Option<Arc<AtomicBool>>) -> Self {
        SimKernel { interp: Interp::new(cancel), greeted: false, outputs: Vec::new() }
    }

    pub fn handle_line(&mut self, line: &str) -> Action {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Action::Reply(Response::error(format!("protocol error: {e}")).to_line()),
        };
        let reply = match request {
            Request::Hello { protocol_version } => {
                if self.greeted {
                    Response::error("protocol error: duplicate hello")
                } else if protocol_version != PROTOCOL_VERSION {
                    Response::error(format!("protocol error: unsupported version {protocol_version}"))
                } else {
                    self.greeted = true;
                    Response { protocol_version: Some(PROTOCOL_VERSION), ..Response::ok() }
                }
            }
            _ if !self.greeted => Response::error("protocol error: hello required first"),
            Request::Exec { cell_id, code } => {
                let result = self.interp.run_cell(&code);
                let mut reply = Response {
                    stdout: Some(result.stdout.clone()),
                    stderr: Some(result.stderr),
                    ..Response::ok()
                };
                match result.end {
                    CellEnd::Ok => self.outputs.push((cell_id, result.stdout)),
                    CellEnd::Err(e) => {
                        reply.ok = false;
                        reply.error = Some(e);
                    }
                    CellEnd::Exit(code) => return Action::Exit(code),
                    CellEnd::Cancelled => return Action::Exit(-1),
                }
                reply
            }
            Request::Status => self.status(),
            Request::Output { stage } => {
                let text: String = self
                    .outputs
                    .iter()
                    .filter(|(id, _)| cell_stage(id) == stage)
                    .map(|(_, out)| out.as_str())
                    .collect();
                Response { text: Some(text.trim_end_matches('\n').to_string()), ..Response::ok() }
            }
            Request::Shutdown => return Action::Shutdown(Response::ok().to_line()),
        };
        Action::Reply(reply.to_line())
    }

    fn status(&self) -> Response {
        let Some(frame) = self.interp.frame("df") else {
            return Response::error("table object missing");
        };
        let cells = frame.cell_rows();
        let table = match Table::new(frame.columns.clone(), cells.clone()) {
            Ok(t) => t,
            Err(e) => return Response::error(format!("table object unusable: {e}")),
        };
        let input = DigestInput {
            columns: &frame.columns,
            shape: [frame.nrows(), frame.columns.len()],
            cells,
            variables: self
                .interp
                .globals
                .iter()
                .filter(|(_, v)| !matches!(v, Value::Module(_)))
                .map(|(k, _)| k.as_str())
                .collect(),
        };
        let digest = Sha256::digest(serde_json::to_vec(&input).expect("digest input serializes"));
        Response {
            markdown: Some(table.to_markdown(None)),
            digest: Some(hex::encode(digest)),
            ..Response::ok()
        }
    }
}

/// Serves requests line by line until shutdown, EOF or a simulated exit.
/// Returns the process exit code.
pub fn serve(input: impl BufRead, mut output: impl Write) -> i32 {
    let mut kernel = SimKernel::new(None);
    for line in input.lines() {
        let Ok(line) = line else { return 1 };
        if line.trim().is_empty() {
            continue;
        }
        match kernel.handle_line(&line) {
            Action::Reply(r) => {
                if writeln!(output, "{r}").and_then(|_| output.flush()).is_err() {
                    return 1;
                }
            }
            Action::Exit(code) => return code,
            Action::Shutdown(r) => {
                let _ = writeln!(output, "{r}").and_then(|_| output.flush());
                return 0;
            }
        }
    }
    0
}
