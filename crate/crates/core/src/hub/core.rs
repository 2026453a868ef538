//! The transport-independent hub: admission, ordering checks, routing into
//! the session and out to client roles, recording and replay.

use std::collections::VecDeque;

use super::envelope::{Body, Envelope, Kind, Role};
use super::router::{route, ConnId, Refusal, Router};
use super::trace::{Pacer, Recorder, Trace};
use crate::ids::ProxyId;
use crate::robot::Pose2;
use crate::session::{Metrics, Session};

/// An envelope and the connections it goes to. Rejections are reported
/// even when nobody is connected to receive them.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub to: Vec<ConnId>,
    pub envelope: Envelope,
}

pub struct HubCore {
    router: Router,
    session: Session,
    recorder: Option<Recorder>,
}

impl HubCore {
    pub fn new(session: Session) -> Self {
        Self {
            router: Router::new(),
            session,
            recorder: None,
        }
    }

    pub fn with_recorder(mut self, recorder: Recorder) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn hello(&mut self, conn: ConnId, env: &Envelope) -> Result<(), Refusal> {
        self.router.admit(conn, env.role, &env.sender)
    }

    pub fn leave(&mut self, conn: ConnId) {
        self.router.leave(conn);
    }

    fn record(&mut self, env: &Envelope) {
        if let Some(r) = &mut self.recorder {
            r.record(env);
        }
    }

    /// Advances the simulation to `hub_ms` and routes what it produced.
    pub fn advance(&mut self, hub_ms: u64) -> Vec<Delivery> {
        let produced = self.session.advance_to(hub_ms);
        let mut out = Vec::with_capacity(produced.len());
        for mut env in produced {
            env.hub_ms = Some(env.t_ms);
            self.record(&env);
            let to = self.router.recipients(&route(env.kind(), env.role), None);
            if !to.is_empty() {
                out.push(Delivery { to, envelope: env });
            }
        }
        out
    }

    fn nack(&mut self, origin: Option<ConnId>, err: &super::envelope::ProtocolError, hub_ms: u64) -> Delivery {
        self.session.count_nack();
        let mut env = self.session.envelope(hub_ms, "hub", Body::Nack(err.to_nack()));
        env.hub_ms = Some(hub_ms);
        self.record(&env);
        Delivery {
            to: origin.into_iter().collect(),
            envelope: env,
        }
    }

    /// Handles a frame that failed to parse.
    pub fn reject(&mut self, origin: Option<ConnId>, err: &super::envelope::ProtocolError, hub_ms: u64) -> Delivery {
        self.nack(origin, err, hub_ms)
    }

    /// Accepts one envelope at hub time `hub_ms`. `origin` is the connection
    /// it came from, or `None` for in-process and replayed input.
    pub fn submit(&mut self, origin: Option<ConnId>, mut env: Envelope, hub_ms: u64) -> Vec<Delivery> {
        let mut out = self.advance(hub_ms);
        env.hub_ms = Some(hub_ms);
        if env.role == Role::Controller || env.kind() == Kind::Hello {
            let reason = if env.kind() == Kind::Hello {
                "hello may only open a connection"
            } else {
                "controller envelopes originate in the hub"
            };
            let err = super::envelope::ProtocolError::new(Some(env.seq), reason);
            out.push(self.nack(origin, &err, hub_ms));
            return out;
        }
        if let Err(err) = self.router.check(origin, &env) {
            out.push(self.nack(origin, &err, hub_ms));
            return out;
        }
        self.record(&env);
        let mut queue = VecDeque::from([(env, origin)]);
        while let Some((env, from)) = queue.pop_front() {
            let r = route(env.kind(), env.role);
            let to = self.router.recipients(&r, from);
            for &consumer in r.consumers {
                match self.session.consume(&env, consumer) {
                    Ok(produced) => {
                        for mut o in produced {
                            o.hub_ms = Some(hub_ms);
                            self.record(&o);
                            if o.kind() == Kind::Snapshot {
                                let mut to: Vec<ConnId> = from.into_iter().collect();
                                to.extend(self.router.recipients(&route(Kind::Snapshot, o.role), from));
                                out.push(Delivery { to, envelope: o });
                            } else {
                                queue.push_back((o, None));
                            }
                        }
                    }
                    Err(err) => {
                        out.push(self.nack(from, &err, hub_ms));
                        break;
                    }
                }
            }
            if !to.is_empty() {
                out.push(Delivery { to, envelope: env });
            }
        }
        out
    }

    /// Advances to `hub_ms` and appends a recorder checkpoint holding the
    /// final snapshot, so a replay can verify itself.
    pub fn checkpoint(&mut self, hub_ms: u64) -> Vec<Delivery> {
        let out = self.advance(hub_ms);
        let snap = self.session.snapshot(false);
        let mut env = self.session.envelope(hub_ms, "hub", Body::Snapshot(Box::new(snap)));
        env.role = Role::Recorder;
        env.hub_ms = Some(hub_ms);
        self.record(&env);
        out
    }

    pub fn metrics(&self) -> Metrics {
        self.session.metrics()
    }

    pub fn into_parts(self) -> (Session, Option<Recorder>) {
        (self.session, self.recorder)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("trace was recorded with config {recorded}, this scenario hashes to {current}; pass the override to replay anyway")]
    ConfigMismatch { recorded: String, current: String },
    #[error(transparent)]
    Session(#[from] crate::session::SessionError),
}

/// One way a replay diverged from its recording.
#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    /// The trace holds an input the hub rejects (e.g. out-of-order seq).
    Rejected { entry: usize, reason: String },
    /// Entries are not ordered by hub time.
    TimeOrder { entry: usize },
    /// The recorded checkpoint disagrees with the replayed session.
    Checkpoint { entry: usize, what: String },
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::Rejected { entry, reason } => write!(f, "entry {entry}: {reason}"),
            Divergence::TimeOrder { entry } => write!(f, "entry {entry}: hub time goes backwards"),
            Divergence::Checkpoint { entry, what } => write!(f, "entry {entry}: checkpoint mismatch: {what}"),
        }
    }
}

pub struct ReplayOutcome {
    pub session: Session,
    pub divergences: Vec<Divergence>,
    pub checkpoints: usize,
}

impl ReplayOutcome {
    pub fn poses(&self) -> Vec<(ProxyId, Pose2)> {
        self.session.poses()
    }
}

/// Re-feeds the external inputs of `trace` into a fresh session, paced by
/// `pacer`. Hub-produced entries are regenerated, not replayed; recorder
/// checkpoints are compared against the regenerated state.
pub fn replay(
    trace: &Trace,
    session: Session,
    pacer: &mut dyn Pacer,
    allow_config_mismatch: bool,
) -> Result<ReplayOutcome, ReplayError> {
    let current = session.scenario().config_hash();
    if trace.header.config_hash != current && !allow_config_mismatch {
        return Err(ReplayError::ConfigMismatch {
            recorded: trace.header.config_hash.clone(),
            current,
        });
    }
    // rejections the recording already contains are part of the session
    let mut recorded_nacks: VecDeque<&super::envelope::Nack> = trace
        .entries
        .iter()
        .filter(|e| e.role == Role::Controller)
        .filter_map(|e| match &e.body {
            Body::Nack(n) => Some(n),
            _ => None,
        })
        .collect();
    let mut hub = HubCore::new(session);
    let mut divergences = Vec::new();
    let mut checkpoints = 0;
    let mut last = 0;
    for (i, env) in trace.entries.iter().enumerate() {
        let t = env.hub_ms.unwrap_or(last);
        if t < last {
            divergences.push(Divergence::TimeOrder { entry: i });
        }
        last = last.max(t);
        match (env.role, &env.body) {
            (Role::Controller, _) => continue,
            (Role::Recorder, Body::Snapshot(recorded)) => {
                pacer.wait_until(t);
                hub.advance(t);
                checkpoints += 1;
                let now = hub.session.snapshot(false);
                if now.hash != recorded.hash {
                    divergences.push(Divergence::Checkpoint {
                        entry: i,
                        what: format!("state hash {} vs recorded {}", now.hash, recorded.hash),
                    });
                }
                for (a, b) in now.robots.iter().zip(&recorded.robots) {
                    if a.id != b.id || a.pose != b.pose {
                        divergences.push(Divergence::Checkpoint {
                            entry: i,
                            what: format!("robot {} at {:?} vs recorded {:?}", a.id, a.pose, b.pose),
                        });
                    }
                }
            }
            _ => {
                pacer.wait_until(t);
                let mut input = env.clone();
                input.hub_ms = None;
                for d in hub.submit(None, input, t) {
                    if let Body::Nack(n) = &d.envelope.body {
                        if recorded_nacks.front() == Some(&n) {
                            recorded_nacks.pop_front();
                            continue;
                        }
                        divergences.push(Divergence::Rejected {
                            entry: i,
                            reason: n.reason.clone(),
                        });
                    }
                }
            }
        }
    }
    hub.advance(last);
    let (session, _) = hub.into_parts();
    Ok(ReplayOutcome {
        session,
        divergences,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gesture::PoseSample;
    use crate::hub::trace::{TraceHeader, Unpaced};
    use crate::scenario::Scenario;
    use crate::world::{ReadingSet, TablePose};

    fn core() -> HubCore {
        let s = Scenario::demo();
        let header = TraceHeader::new(&s.id, s.config_hash());
        HubCore::new(Session::new(s, ReadingSet::new()).unwrap()).with_recorder(Recorder::new(header))
    }

    fn hello(role: Role, sender: &str) -> Envelope {
        Envelope::new(0, 0, role, sender, Body::Hello)
    }

    fn lift(seq: u64, t: u64, z: f64) -> Envelope {
        let pose = TablePose {
            z,
            ..TablePose::on_table(0.5, 0.3, 0.0, t)
        };
        Envelope::new(
            t,
            seq,
            Role::Tracker,
            "mocap",
            Body::PoseUpdate(PoseSample {
                proxy: "P1".into(),
                pose,
            }),
        )
    }

    #[test]
    fn pickup_fans_out_to_dashboard_and_tabletop() {
        let mut hub = core();
        hub.hello(1, &hello(Role::Tracker, "mocap")).unwrap();
        hub.hello(2, &hello(Role::Dashboard, "wall")).unwrap();
        hub.hello(3, &hello(Role::Tabletop, "table")).unwrap();
        hub.hello(4, &hello(Role::Robot, "bots")).unwrap();
        let out = hub.submit(Some(1), lift(1, 60, 0.1), 60);
        let kinds: Vec<(Kind, Vec<ConnId>)> = out.iter().map(|d| (d.envelope.kind(), d.to.clone())).collect();
        assert!(kinds.contains(&(Kind::StateDelta, vec![2, 3])));
        assert!(kinds.contains(&(Kind::Effects, vec![2, 3])));
        assert!(kinds.iter().any(|(k, to)| *k == Kind::WheelCommand && to == &vec![4]));
        assert!(!kinds.iter().any(|(k, _)| *k == Kind::PoseUpdate));
        assert_eq!(hub.session().state().filter, vec!["B1".into()]);
    }

    #[test]
    fn malformed_and_reordered_input_is_nacked_not_fatal() {
        let mut hub = core();
        hub.hello(1, &hello(Role::Tracker, "mocap")).unwrap();
        hub.submit(Some(1), lift(5, 10, 0.0), 10);
        let out = hub.submit(Some(1), lift(5, 20, 0.0), 20);
        let nack = out.iter().find(|d| d.envelope.kind() == Kind::Nack).unwrap();
        assert_eq!(nack.to, vec![1]);
        let Body::Nack(n) = &nack.envelope.body else { unreachable!() };
        assert_eq!(n.seq, Some(5));
        // the connection keeps working
        let out = hub.submit(Some(1), lift(6, 30, 0.1), 30);
        assert!(out.iter().all(|d| d.envelope.kind() != Kind::Nack));
        assert_eq!(hub.metrics().nacks, 1);
    }

    #[test]
    fn snapshot_goes_back_to_the_requester() {
        let mut hub = core();
        hub.hello(7, &hello(Role::Dashboard, "wall")).unwrap();
        hub.hello(8, &hello(Role::Tabletop, "table")).unwrap();
        let out = hub.submit(Some(7), Envelope::new(0, 1, Role::Dashboard, "wall", Body::SnapshotRequest), 0);
        let snap = out.iter().find(|d| d.envelope.kind() == Kind::Snapshot).unwrap();
        assert_eq!(snap.to, vec![7]);
        let Body::Snapshot(s) = &snap.envelope.body else { unreachable!() };
        assert_eq!(s.render.as_ref().unwrap().charts.len(), 12);
        assert_eq!(s.robots.len(), 5);
    }

    #[test]
    fn replay_reproduces_recording() {
        let mut hub = core();
        hub.submit(None, lift(1, 100, 0.0), 100);
        hub.submit(None, lift(2, 200, 0.1), 200);
        hub.submit(None, lift(3, 900, 0.1), 900);
        hub.submit(None, lift(4, 1500, 0.0), 1500);
        hub.checkpoint(3000);
        let poses = hub.session().poses();
        let hash = hub.metrics().final_state_hash;
        let (session, rec) = hub.into_parts();
        let trace = rec.unwrap().finish().unwrap();
        let fresh = Session::new(session.scenario().clone(), ReadingSet::new()).unwrap();
        let out = replay(&trace, fresh, &mut Unpaced, false).unwrap();
        assert_eq!(out.divergences, vec![]);
        assert_eq!(out.checkpoints, 1);
        assert_eq!(out.poses(), poses);
        assert_eq!(out.session.metrics().final_state_hash, hash);
    }

    #[test]
    fn replay_refuses_foreign_config() {
        let mut s = Scenario::demo();
        let trace = Trace::new(TraceHeader::new(&s.id, s.config_hash()));
        s.control.cruise_speed = 0.1;
        let fresh = || Session::new(s.clone(), ReadingSet::new()).unwrap();
        assert!(matches!(
            replay(&trace, fresh(), &mut Unpaced, false),
            Err(ReplayError::ConfigMismatch { .. })
        ));
        assert!(replay(&trace, fresh(), &mut Unpaced, true).is_ok());
    }

    #[test]
    fn empty_trace_replays_to_initial_state() {
        let s = Scenario::demo();
        let trace = Trace::new(TraceHeader::new(&s.id, s.config_hash()));
        let out = replay(&trace, Session::new(s.clone(), ReadingSet::new()).unwrap(), &mut Unpaced, false).unwrap();
        assert_eq!(out.session.state(), &crate::dashboard::DashboardState::new());
        assert_eq!(out.poses(), s.starts());
    }
}
