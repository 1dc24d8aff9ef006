//! Wire format: one JSON object per message, tagged by `type`, with `"v": 1`.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::eval::DecisionTrace;
use crate::sim::SimSnapshot;
use crate::synth::RepairReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    Pause,
    Resume,
    /// Move the cursor `n` ticks before the newest snapshot.
    Rewind { n: u64 },
    /// Advance `n` ticks now, whatever the mode. For scripted clients.
    Step { n: u64 },
    /// Execute `action` on the next step without recording a demonstration.
    SetAction { action: String },
    /// Record `⟨current action, state at cursor, action⟩` and resume with it.
    LabelTransition { action: String },
    SaveDemos { path: String },
    RunIdips { min_score: f64 },
    LoadPolicy { text: String },
    StepRate { hz: f64 },
    GetDemos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Mode {
    Running,
    Paused,
    Rewound { tick: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub mode: Mode,
    /// The run ended at this snapshot (goal, collision or tick limit).
    pub done: bool,
    pub snapshot: SimSnapshot,
    /// What the policy decides at this snapshot.
    pub decision: DecisionTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    UnsupportedVersion,
    NotPaused,
    RewindTooFar,
    UnknownAction,
    InvalidPolicy,
    BadRate,
    Synthesis,
    Io,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Ack { request: String },
    Frame(Box<Frame>),
    Demos { count: usize, demos: Vec<Json> },
    Report { report: RepairReport },
    Policy { text: String },
    Saved { path: String, count: usize },
    Error { code: ErrorCode, message: String },
}

impl ServerMsg {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMsg::Error {
            code,
            message: message.into(),
        }
    }
}

fn with_version(mut v: Json) -> Json {
    if let Json::Object(o) = &mut v {
        o.insert("v".into(), Json::from(1));
    }
    v
}

/// Serializes any message with the version field added.
pub fn encode<T: Serialize>(msg: &T) -> String {
    with_version(serde_json::to_value(msg).expect("messages serialize")).to_string()
}

pub fn decode(text: &str) -> Result<ClientMsg, ServerMsg> {
    let mut v: Json =
        serde_json::from_str(text).map_err(|e| ServerMsg::error(ErrorCode::BadMessage, e.to_string()))?;
    let o = v
        .as_object_mut()
        .ok_or_else(|| ServerMsg::error(ErrorCode::BadMessage, "expected a JSON object"))?;
    match o.remove("v").and_then(|x| x.as_u64()) {
        Some(1) => {}
        _ => return Err(ServerMsg::error(ErrorCode::UnsupportedVersion, "expected \"v\": 1")),
    }
    serde_json::from_value(v).map_err(|e| ServerMsg::error(ErrorCode::BadMessage, e.to_string()))
}
