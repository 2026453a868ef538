//! Wire format: one JSON envelope per WebSocket text frame.
//!
//! ```json
//! {"v":1,"t_ms":1520,"seq":31,"role":"tracker","sender":"optitrack",
//!  "kind":"pose_update","payload":{"proxy":"P1","t_ms":1520,"x":0.4,...}}
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dashboard::{DashboardState, Effect, RenderModel};
use crate::gesture::{InteractionEvent, PoseSample};
use crate::ids::ProxyId;
use crate::robot::{CommandMessage, Pose2};
use crate::world::MapViewport;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Tracker,
    Robot,
    Dashboard,
    Tabletop,
    Recorder,
    /// The hub's own consumers (gesture engine, reducer, simulator).
    Controller,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Tracker => "tracker",
            Role::Robot => "robot",
            Role::Dashboard => "dashboard",
            Role::Tabletop => "tabletop",
            Role::Recorder => "recorder",
            Role::Controller => "controller",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The dashboard state after a transition. The full state is sent rather
/// than a diff: it is small and makes every delta self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDelta {
    pub state: DashboardState,
    pub hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<InteractionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotView {
    pub id: ProxyId,
    pub pose: Pose2,
    pub mode: String,
}

/// Everything a client needs to rebuild its view from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: DashboardState,
    pub hash: String,
    pub viewport: MapViewport,
    pub robots: Vec<RobotView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nack {
    /// Sequence number of the rejected message, when it could be read.
    pub seq: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Body {
    Hello,
    PoseUpdate(PoseSample),
    InteractionEvent(InteractionEvent),
    WheelCommand(CommandMessage),
    ViewportChange(MapViewport),
    StateDelta(Box<StateDelta>),
    Effects(Effects),
    SnapshotRequest,
    Snapshot(Box<Snapshot>),
    Nack(Nack),
}

/// Payload-free message kind, used for routing and counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Hello,
    PoseUpdate,
    InteractionEvent,
    WheelCommand,
    ViewportChange,
    StateDelta,
    Effects,
    SnapshotRequest,
    Snapshot,
    Nack,
}

impl Body {
    pub fn kind(&self) -> Kind {
        match self {
            Body::Hello => Kind::Hello,
            Body::PoseUpdate(_) => Kind::PoseUpdate,
            Body::InteractionEvent(_) => Kind::InteractionEvent,
            Body::WheelCommand(_) => Kind::WheelCommand,
            Body::ViewportChange(_) => Kind::ViewportChange,
            Body::StateDelta(_) => Kind::StateDelta,
            Body::Effects(_) => Kind::Effects,
            Body::SnapshotRequest => Kind::SnapshotRequest,
            Body::Snapshot(_) => Kind::Snapshot,
            Body::Nack(_) => Kind::Nack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v: u32,
    /// Sender clock, monotonic milliseconds.
    pub t_ms: u64,
    /// Strictly increasing per `(role, sender)`.
    pub seq: u64,
    pub role: Role,
    pub sender: String,
    /// Reserved for multi-table sessions; ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(flatten)]
    pub body: Body,
    /// Hub receive time, stamped by the hub.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hub_ms: Option<u64>,
}

/// A frame the hub could not accept.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct ProtocolError {
    pub seq: Option<u64>,
    pub reason: String,
}

impl ProtocolError {
    pub fn new(seq: Option<u64>, reason: impl Into<String>) -> Self {
        Self {
            seq,
            reason: reason.into(),
        }
    }

    pub fn to_nack(&self) -> Nack {
        Nack {
            seq: self.seq,
            reason: self.reason.clone(),
        }
    }
}

impl Envelope {
    pub fn new(t_ms: u64, seq: u64, role: Role, sender: impl Into<String>, body: Body) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            t_ms,
            seq,
            role,
            sender: sender.into(),
            session: None,
            body,
            hub_ms: None,
        }
    }

    pub fn kind(&self) -> Kind {
        self.body.kind()
    }

    /// Parses and validates one frame.
    pub fn parse(text: &str) -> Result<Envelope, ProtocolError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProtocolError::new(None, format!("not JSON: {e}")))?;
        let seq = value.get("seq").and_then(|s| s.as_u64());
        match value.get("v").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
            Some(v) => return Err(ProtocolError::new(seq, format!("unsupported protocol version {v}"))),
            None => return Err(ProtocolError::new(seq, "missing protocol version")),
        }
        serde_json::from_value(value).map_err(|e| ProtocolError::new(seq, format!("malformed envelope: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}
