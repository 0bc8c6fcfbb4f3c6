//! Newline-delimited JSON messages exchanged with an execution kernel.
//!
//! Every request is one JSON object on one line with an `op` tag; every
//! reply is one JSON object on one line with at least an `ok` field.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::stages::StageId;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Hello { protocol_version: u32 },
    Exec { cell_id: String, code: String },
    Status,
    Output { stage: String },
    Shutdown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markdown: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl Response {
    pub fn ok() -> Self {
        Response { ok: true, ..Default::default() }
    }

    pub fn error(msg: impl Into<String>) -> Self {
        Response { ok: false, error: Some(msg.into()), ..Default::default() }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// `<stage>:<operation index or 0>:<attempt>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellId {
    pub stage: StageId,
    pub operation: usize,
    pub attempt: u32,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.stage, self.operation, self.attempt)
    }
}

impl FromStr for CellId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [stage, op, attempt] = parts[..] else {
            return Err(format!("malformed cell id '{s}'"));
        };
        Ok(CellId {
            stage: stage.parse().map_err(|e| format!("{e}"))?,
            operation: op.parse().map_err(|_| format!("bad operation index in '{s}'"))?,
            attempt: attempt.parse().map_err(|_| format!("bad attempt in '{s}'"))?,
        })
    }
}

/// Stage prefix of a cell id, without validating the rest.
pub fn cell_stage(cell_id: &str) -> &str {
    cell_id.split(':').next().unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let r = Request::Exec { cell_id: "reasoning:2:1".into(), code: "x = 1".into() };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"op":"exec","cell_id":"reasoning:2:1","code":"x = 1"}"#
        );
        assert_eq!(serde_json::from_str::<Request>(r#"{"op":"status"}"#).unwrap(), Request::Status);
        assert_eq!(Response::ok().to_line(), r#"{"ok":true}"#);
    }

    #[test]
    fn cell_id_round_trip() {
        let id = CellId { stage: StageId::DataTypeCleaning, operation: 3, attempt: 2 };
        assert_eq!(id.to_string(), "data_type_cleaning:3:2");
        assert_eq!(id.to_string().parse::<CellId>().unwrap(), id);
        assert!("reasoning:1".parse::<CellId>().is_err());
        assert_eq!(cell_stage("final_answering:0:1"), "final_answering");
    }
}
