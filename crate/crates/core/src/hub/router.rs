//! Who is connected, who gets what.
//!
//! | kind              | hub consumers                 | client roles        |
//! |-------------------|-------------------------------|---------------------|
//! | pose_update       | gesture, robot controller     | —                   |
//! | pose_update (*)   | —                             | tabletop            |
//! | interaction_event | reducer                       | —                   |
//! | wheel_command     | —                             | robot               |
//! | viewport_change   | robot controller, world       | —                   |
//! | state_delta       | —                             | dashboard, tabletop |
//! | effects           | —                             | dashboard, tabletop |
//! | snapshot_request  | snapshot                      | —                   |
//! | snapshot, nack    | —                             | the requester only  |
//!
//! (*) robot telemetry published by the hub itself. Recorder clients get a
//! copy of everything.

use std::collections::BTreeMap;

use super::envelope::{Envelope, Kind, ProtocolError, Role};

pub type ConnId = u64;

/// Consumers living inside the hub.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Consumer {
    Gesture,
    RobotController,
    Reducer,
    World,
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub consumers: &'static [Consumer],
    pub roles: &'static [Role],
}

pub fn route(kind: Kind, from: Role) -> Route {
    use Consumer::*;
    let (consumers, roles): (&'static [Consumer], &'static [Role]) = match (kind, from) {
        (Kind::PoseUpdate, Role::Controller) => (&[], &[Role::Tabletop]),
        (Kind::PoseUpdate, _) => (&[Gesture, RobotController], &[]),
        (Kind::InteractionEvent, _) => (&[Reducer], &[]),
        (Kind::WheelCommand, _) => (&[], &[Role::Robot]),
        (Kind::ViewportChange, _) => (&[RobotController, World], &[]),
        (Kind::StateDelta | Kind::Effects, _) => (&[], &[Role::Dashboard, Role::Tabletop]),
        (Kind::SnapshotRequest, _) => (&[Snapshot], &[]),
        (Kind::Hello | Kind::Snapshot | Kind::Nack, _) => (&[], &[]),
    };
    Route { consumers, roles }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peer {
    pub role: Role,
    pub sender: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Refusal {
    #[error("a {0} client is already connected")]
    SingletonTaken(Role),
    #[error("role {0} is reserved for the hub")]
    Reserved(Role),
    #[error("connection already introduced itself")]
    AlreadyIntroduced,
}

/// Connection registry plus the per-sender ordering check.
#[derive(Debug, Default)]
pub struct Router {
    peers: BTreeMap<ConnId, Peer>,
    last_seq: BTreeMap<(Role, String), u64>,
}

impl Router {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a connection after its hello. There is one dashboard.
    pub fn admit(&mut self, conn: ConnId, role: Role, sender: &str) -> Result<(), Refusal> {
        if self.peers.contains_key(&conn) {
            return Err(Refusal::AlreadyIntroduced);
        }
        if role == Role::Controller {
            return Err(Refusal::Reserved(role));
        }
        if role == Role::Dashboard && self.peers.values().any(|p| p.role == Role::Dashboard) {
            return Err(Refusal::SingletonTaken(role));
        }
        self.peers.insert(
            conn,
            Peer {
                role,
                sender: sender.to_owned(),
            },
        );
        Ok(())
    }

    pub fn leave(&mut self, conn: ConnId) -> Option<Peer> {
        self.peers.remove(&conn)
    }

    pub fn peer(&self, conn: ConnId) -> Option<&Peer> {
        self.peers.get(&conn)
    }

    pub fn peers(&self) -> impl Iterator<Item = (ConnId, &Peer)> {
        self.peers.iter().map(|(c, p)| (*c, p))
    }

    /// Checks that the envelope comes from the role its connection declared
    /// (when it came over a connection) and that its sequence number moves
    /// forward for its sender. Accepted numbers are remembered.
    pub fn check(&mut self, conn: Option<ConnId>, env: &Envelope) -> Result<(), ProtocolError> {
        if let Some(conn) = conn {
            let Some(peer) = self.peers.get(&conn) else {
                return Err(ProtocolError::new(Some(env.seq), "hello required before other messages"));
            };
            if peer.role != env.role {
                return Err(ProtocolError::new(
                    Some(env.seq),
                    format!("connection declared role {} but sent as {}", peer.role, env.role),
                ));
            }
        }
        let key = (env.role, env.sender.clone());
        if let Some(&last) = self.last_seq.get(&key) {
            if env.seq <= last {
                return Err(ProtocolError::new(
                    Some(env.seq),
                    format!(
                        "FIFO violation: seq {} from {}/{} after {last}",
                        env.seq, env.role, env.sender
                    ),
                ));
            }
        }
        self.last_seq.insert(key, env.seq);
        Ok(())
    }

    /// Connections that should receive an envelope taking `route`, never
    /// including the origin.
    pub fn recipients(&self, route: &Route, origin: Option<ConnId>) -> Vec<ConnId> {
        self.peers
            .iter()
            .filter(|(c, p)| Some(**c) != origin && (p.role == Role::Recorder || route.roles.contains(&p.role)))
            .map(|(c, _)| *c)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hub::envelope::Body;

    #[test]
    fn second_dashboard_is_refused() {
        let mut r = Router::new();
        r.admit(1, Role::Dashboard, "wall").unwrap();
        assert_eq!(r.admit(2, Role::Dashboard, "wall-2"), Err(Refusal::SingletonTaken(Role::Dashboard)));
        r.admit(3, Role::Tabletop, "t1").unwrap();
        r.admit(4, Role::Tabletop, "t2").unwrap();
        r.leave(1);
        r.admit(2, Role::Dashboard, "wall-2").unwrap();
    }

    #[test]
    fn pose_update_reaches_exactly_two_consumers() {
        let pose = route(Kind::PoseUpdate, Role::Tracker);
        assert_eq!(pose.consumers, &[Consumer::Gesture, Consumer::RobotController]);
        assert!(pose.roles.is_empty());
        assert_eq!(route(Kind::InteractionEvent, Role::Controller).consumers, &[Consumer::Reducer]);
        assert_eq!(route(Kind::WheelCommand, Role::Controller).roles, &[Role::Robot]);
        assert_eq!(route(Kind::StateDelta, Role::Controller).roles, &[Role::Dashboard, Role::Tabletop]);
        assert_eq!(
            route(Kind::ViewportChange, Role::Tabletop).consumers,
            &[Consumer::RobotController, Consumer::World]
        );
    }

    #[test]
    fn sequence_must_increase_per_sender() {
        let mut r = Router::new();
        let env = |seq, sender: &str| Envelope::new(0, seq, Role::Tracker, sender, Body::SnapshotRequest);
        r.check(None, &env(1, "a")).unwrap();
        r.check(None, &env(5, "a")).unwrap();
        r.check(None, &env(1, "b")).unwrap();
        let err = r.check(None, &env(5, "a")).unwrap_err();
        assert!(err.reason.starts_with("FIFO violation"));
        r.check(None, &env(6, "a")).unwrap();
    }

    #[test]
    fn role_must_match_hello() {
        let mut r = Router::new();
        let env = Envelope::new(0, 1, Role::Robot, "r1", Body::SnapshotRequest);
        assert!(r.check(Some(9), &env).is_err());
        r.admit(9, Role::Tracker, "t").unwrap();
        assert!(r.check(Some(9), &env).unwrap_err().reason.contains("declared role tracker"));
    }

    #[test]
    fn recorders_get_everything_but_their_own() {
        let mut r = Router::new();
        r.admit(1, Role::Recorder, "rec").unwrap();
        r.admit(2, Role::Robot, "bots").unwrap();
        r.admit(3, Role::Dashboard, "wall").unwrap();
        assert_eq!(r.recipients(&route(Kind::WheelCommand, Role::Controller), None), vec![1, 2]);
        assert_eq!(r.recipients(&route(Kind::PoseUpdate, Role::Tracker), Some(1)), Vec::<ConnId>::new());
        assert_eq!(r.recipients(&route(Kind::Effects, Role::Controller), None), vec![1, 3]);
    }
}
