//! Autonomous tangible proxies on a tabletop map: gesture recognition from
//! tracked poses, a deterministic dashboard reducer, a multi-robot planner
//! and simulator, and the message hub that ties them together.

pub mod check;
pub mod dashboard;
pub mod fixtures;
pub mod gesture;
pub mod hub;
pub mod ids;
pub mod robot;
pub mod runner;
pub mod scenario;
pub mod session;
pub mod world;

pub use ids::{BuildingId, ProxyId};
pub use scenario::Scenario;
pub use session::{Metrics, Session};
