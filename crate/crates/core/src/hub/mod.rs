//! Role-based message hub: WebSocket transport, routing into the session,
//! and full-session record/replay.

pub mod core;
pub mod envelope;
pub mod router;
pub mod server;
pub mod trace;

pub use self::core::{replay, Delivery, Divergence, HubCore, ReplayError, ReplayOutcome};
pub use envelope::{Body, Envelope, Kind, Nack, ProtocolError, Role, RobotView, Snapshot, StateDelta, PROTOCOL_VERSION};
pub use router::{route, ConnId, Consumer, Refusal, Route, Router};
pub use server::{serve, ServerConfig, ServerHandle, DEFAULT_PORT};
pub use trace::{Pacer, Realtime, Recorder, Trace, TraceError, TraceHeader, Unpaced, VirtualClock};
