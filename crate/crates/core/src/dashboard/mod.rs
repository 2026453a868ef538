//! The dashboard state machine: interaction events in, state and render
//! effects out.

pub mod persist;
pub mod reducer;
pub mod render;
pub mod state;

pub use persist::{canonical_json, load_shoebox, parse_state, save_shoebox, shoebox_path, state_hash};
pub use reducer::{reduce, replay, replay_from, ReplayError};
pub use render::{snapshot, LegendEntry, RenderModel, ShoeboxGroup};
pub use state::{Binding, DashboardState, Effect, Layer, Shoebox};

use crate::ids::ProxyId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DashboardError {
    #[error("proxy {0} is not bound to any building")]
    UnboundProxy(ProxyId),
    #[error("persistence: {0}")]
    Persist(String),
}
