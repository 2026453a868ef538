//! Turns per-proxy 6-DoF pose streams into discrete interaction events and
//! the continuous proxy-shadow signal.

pub mod config;
pub mod event;
pub mod recognizer;
pub mod shadow;

pub use config::GestureConfig;
pub use event::{merge_events, EventKind, InteractionEvent, PoseSample};
pub use recognizer::{ingest_pose, GestureContext, GestureEngine, ProxyTrack};
pub use shadow::{magnifier_scale, screen_point, shadow, target_of, ChartLayout, ScreenPoint, ShadowState, Target};

use crate::ids::ProxyId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GestureError {
    #[error("invalid gesture config: {0}")]
    InvalidConfig(String),
    #[error("proxy {proxy}: stale sample at {t_ms} ms (last accepted {last_ms} ms)")]
    StaleSample { proxy: ProxyId, t_ms: u64, last_ms: u64 },
    #[error("proxy {proxy}: non-finite or below-table pose at {t_ms} ms")]
    InvalidPose { proxy: ProxyId, t_ms: u64 },
}
