//! Wire messages between the session server and a cockpit.
//!
//! Every message is one JSON text frame with a `type` tag. Unknown tags and
//! unknown fields are rejected with the path of the offending field.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use safespect_core::autopilot::PathPlan;
use safespect_core::canonical;
use safespect_core::error::DocumentError;
use safespect_core::events::Event;
use safespect_core::flightsim::DroneState;
use safespect_core::hud::{HudFrame, InterfaceMode};
use safespect_core::input::InputFrame;
use safespect_core::mission::Metrics;
use safespect_core::scenario::ScenarioSpec;

/// Bumped on any incompatible change to the message schemas.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Another cockpit is already flying this session.
    Busy,
    VersionMismatch,
    ModeMismatch,
    /// The message could not be decoded.
    Protocol,
    /// Input arrived before the handshake.
    NotReady,
    /// The session plays a recorded script and ignores live input.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireMessage {
    // cockpit -> server
    Hello {
        schema_version: u32,
        /// Mode the cockpit expects; refused if it differs from the session's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<InterfaceMode>,
    },
    Input {
        input: InputFrame,
    },
    Pause,
    Resume,

    // server -> cockpit
    Welcome {
        schema_version: u32,
        hud_schema_version: u32,
        scenario_digest: String,
        scenario: ScenarioSpec,
        mode: InterfaceMode,
        plan: PathPlan,
        tick_rate_hz: f64,
        /// Next tick the session will run; nonzero after a reconnect.
        tick: u64,
    },
    Frame {
        tick: u64,
        drone: DroneState,
        hud: HudFrame,
        events: Vec<Event>,
    },
    MissionEnd {
        metrics: Metrics,
        stream_hash: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("malformed message at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid message at `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl From<DocumentError> for ProtocolError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Syntax { line, column, message } => ProtocolError::Syntax { line, column, message },
            DocumentError::Schema { path, message } => ProtocolError::Schema { path, message },
        }
    }
}

pub fn encode(msg: &WireMessage) -> String {
    canonical::to_line(msg)
}

/// Decode one text frame.
///
/// The tag is split off first and the payload decoded on its own, so a
/// schema error names the field inside the message rather than the whole
/// message.
pub fn decode(text: &str) -> Result<WireMessage, ProtocolError> {
    let mut obj: Map<String, Value> = canonical::from_str(text)?;
    let tag = match obj.remove("type") {
        Some(Value::String(t)) => t,
        Some(_) => return Err(schema("type", "expected a string")),
        None => return Err(schema("type", "missing message type")),
    };
    let wrapped = Value::Object(Map::from_iter([(tag.clone(), Value::Object(obj))]));
    let body: Body = serde_path_to_error::deserialize(wrapped).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        match path.strip_prefix(&tag).map(|p| p.trim_start_matches('.')) {
            Some(p) if !p.is_empty() => schema(p, &message),
            _ => schema("type", &message),
        }
    })?;
    Ok(body.into())
}

fn schema(path: &str, message: &str) -> ProtocolError {
    ProtocolError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Externally tagged twin of [`WireMessage`], used only for decoding.
#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Body {
    Hello {
        schema_version: u32,
        #[serde(default)]
        mode: Option<InterfaceMode>,
    },
    Input { input: InputFrame },
    Pause {},
    Resume {},
    Welcome {
        schema_version: u32,
        hud_schema_version: u32,
        scenario_digest: String,
        scenario: ScenarioSpec,
        mode: InterfaceMode,
        plan: PathPlan,
        tick_rate_hz: f64,
        tick: u64,
    },
    Frame {
        tick: u64,
        drone: DroneState,
        hud: HudFrame,
        events: Vec<Event>,
    },
    MissionEnd { metrics: Metrics, stream_hash: String },
    Error { code: ErrorCode, message: String },
}

impl From<Body> for WireMessage {
    fn from(b: Body) -> Self {
        match b {
            Body::Hello { schema_version, mode } => WireMessage::Hello { schema_version, mode },
            Body::Input { input } => WireMessage::Input { input },
            Body::Pause {} => WireMessage::Pause,
            Body::Resume {} => WireMessage::Resume,
            Body::Welcome {
                schema_version,
                hud_schema_version,
                scenario_digest,
                scenario,
                mode,
                plan,
                tick_rate_hz,
                tick,
            } => WireMessage::Welcome {
                schema_version,
                hud_schema_version,
                scenario_digest,
                scenario,
                mode,
                plan,
                tick_rate_hz,
                tick,
            },
            Body::Frame { tick, drone, hud, events } => WireMessage::Frame { tick, drone, hud, events },
            Body::MissionEnd { metrics, stream_hash } => WireMessage::MissionEnd { metrics, stream_hash },
            Body::Error { code, message } => WireMessage::Error { code, message },
        }
    }
}
