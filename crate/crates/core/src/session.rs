//! One table session: gesture engine, dashboard reducer, robot simulator and
//! the current map viewport, driven by envelopes the hub routes to them.
//!
//! Time only moves through [`Session::advance_to`], so a session is a pure
//! function of the envelopes it consumed and the hub times they arrived at.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dashboard::{reduce, snapshot as render, state_hash, Binding, DashboardState, Layer};
use crate::gesture::{shadow, GestureEngine, PoseSample};
use crate::hub::envelope::{Body, Effects, Envelope, ProtocolError, Role, RobotView, Snapshot, StateDelta};
use crate::hub::router::Consumer;
use crate::ids::{BuildingId, ProxyId};
use crate::robot::{Pose2, Simulation};
use crate::scenario::Scenario;
use crate::world::{MapViewport, ReadingSet, TablePose};

/// Robot telemetry rate towards tabletop clients.
const TELEMETRY_PERIOD_MS: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Robot(#[from] crate::robot::RobotError),
    #[error(transparent)]
    Gesture(#[from] crate::gesture::GestureError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotReport {
    pub path_length: f64,
    pub replans: u32,
    pub blocked_ticks: u64,
    pub unreachable: bool,
    pub at_target: bool,
    pub final_pose: Pose2,
}

/// The metrics document written by `run`, `replay` and `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub duration_ms: u64,
    pub ticks: u64,
    pub robots: BTreeMap<ProxyId, RobotReport>,
    pub collisions: u64,
    pub boundary_violations: u64,
    pub min_separation: Option<f64>,
    /// Interaction events by kind name.
    pub events: BTreeMap<String, u64>,
    pub viewport_changes: u64,
    pub nacks: u64,
    pub invariant_violations: Vec<String>,
    pub all_at_targets: bool,
    pub final_layer: Layer,
    pub locked: bool,
    pub filter: Vec<BuildingId>,
    /// Charts across all shoebox groups.
    pub shoebox_charts: usize,
    pub final_state_hash: String,
}

impl Metrics {
    /// The exit-code contract: no violated invariant and no collision.
    pub fn ok(&self) -> bool {
        self.invariant_violations.is_empty() && self.collisions == 0 && self.boundary_violations == 0
    }
}

pub struct Session {
    scenario: Scenario,
    binding: Binding,
    readings: ReadingSet,
    gesture: GestureEngine,
    state: DashboardState,
    sim: Simulation,
    viewport: MapViewport,
    seqs: BTreeMap<&'static str, u64>,
    events: BTreeMap<String, u64>,
    viewport_changes: u64,
    nacks: u64,
    violations: Vec<String>,
    /// Sim safety counters already reported as violations.
    reported: (u64, u64),
}

impl Session {
    pub fn new(scenario: Scenario, readings: ReadingSet) -> Result<Self, SessionError> {
        let mut sim = Simulation::new(scenario.workspace, scenario.robot, scenario.control, scenario.starts())?;
        for (id, target) in scenario.targets(&scenario.viewport) {
            sim.set_target(&id, target)?;
        }
        Ok(Self {
            binding: scenario.binding(),
            gesture: GestureEngine::new(scenario.gesture, scenario.workspace, scenario.layout)?,
            viewport: scenario.viewport,
            state: DashboardState::new(),
            sim,
            readings,
            scenario,
            seqs: BTreeMap::new(),
            events: BTreeMap::new(),
            viewport_changes: 0,
            nacks: 0,
            violations: Vec::new(),
            reported: (0, 0),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &DashboardState {
        &self.state
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn viewport(&self) -> &MapViewport {
        &self.viewport
    }

    pub fn time_ms(&self) -> u64 {
        (self.sim.time() * 1000.0).round() as u64
    }

    pub fn poses(&self) -> Vec<(ProxyId, Pose2)> {
        self.sim.robots().iter().map(|r| (r.id.clone(), r.pose)).collect()
    }

    pub(crate) fn count_nack(&mut self) {
        self.nacks += 1;
    }

    /// A hub-originated envelope with the next sequence number of `sender`.
    pub fn envelope(&mut self, t_ms: u64, sender: &'static str, body: Body) -> Envelope {
        let seq = self.seqs.entry(sender).or_insert(0);
        *seq += 1;
        Envelope::new(t_ms, *seq, Role::Controller, sender, body)
    }

    /// Runs the simulator up to hub time `t_ms`, returning the wheel
    /// commands and telemetry it produced.
    pub fn advance_to(&mut self, t_ms: u64) -> Vec<Envelope> {
        let dt_ms = self.scenario.control.dt * 1000.0;
        let telemetry_every = (TELEMETRY_PERIOD_MS / dt_ms).round().max(1.0) as u64;
        let mut out = Vec::new();
        while (self.sim.metrics().ticks + 1) as f64 * dt_ms <= t_ms as f64 + 1e-6 {
            let cmds = self.sim.tick();
            let ticks = self.sim.metrics().ticks;
            let now = (ticks as f64 * dt_ms).round() as u64;
            for c in cmds {
                let env = self.envelope(c.t_ms, "sim", Body::WheelCommand(c));
                out.push(env);
            }
            if ticks % telemetry_every == 0 {
                let poses: Vec<_> = self
                    .sim
                    .robots()
                    .iter()
                    .filter(|r| !r.is_held())
                    .map(|r| (r.id.clone(), r.pose))
                    .collect();
                for (proxy, p) in poses {
                    let sample = PoseSample {
                        proxy,
                        pose: TablePose::on_table(p.x, p.y, p.yaw, now),
                    };
                    let env = self.envelope(now, "sim", Body::PoseUpdate(sample));
                    out.push(env);
                }
            }
            self.check_safety(ticks);
        }
        out
    }

    fn check_safety(&mut self, tick: u64) {
        let m = self.sim.metrics();
        if m.collisions > self.reported.0 {
            self.violations.push(format!("tick {tick}: robots closer than two radii"));
        }
        if m.boundary_violations > self.reported.1 {
            self.violations.push(format!("tick {tick}: robot outside the safe bounds"));
        }
        self.reported = (m.collisions, m.boundary_violations);
    }

    /// Feeds `env` to one hub consumer.
    pub fn consume(&mut self, env: &Envelope, consumer: Consumer) -> Result<Vec<Envelope>, ProtocolError> {
        let reject = |reason: String| ProtocolError::new(Some(env.seq), reason);
        let t = env.hub_ms.unwrap_or(env.t_ms);
        match (consumer, &env.body) {
            (Consumer::Gesture, Body::PoseUpdate(s)) => {
                let building = self
                    .scenario
                    .building_of(&s.proxy)
                    .ok_or_else(|| reject(format!("unknown proxy {}", s.proxy)))?
                    .clone();
                let events = self.gesture.ingest(&s.proxy, s.pose).map_err(|e| reject(e.to_string()))?;
                let mut out: Vec<Envelope> = events
                    .into_iter()
                    .map(|e| self.envelope(e.t_ms, "gesture", Body::InteractionEvent(e)))
                    .collect();
                if self.gesture.is_held(&s.proxy) && self.state.held.contains(&s.proxy) {
                    let sh = shadow(&s.proxy, &s.pose, &building.footprint, &self.scenario.workspace, &self.scenario.gesture);
                    if self.state.shadows.get(&s.proxy) != Some(&sh) && self.state.update_shadow(sh) {
                        let delta = self.delta(None);
                        out.push(self.envelope(t, "reducer", delta));
                    }
                }
                Ok(out)
            }
            (Consumer::RobotController, Body::PoseUpdate(s)) => {
                let Some(robot) = self.sim.robot(&s.proxy) else {
                    return Ok(Vec::new());
                };
                let pose = Pose2::new(s.pose.x, s.pose.y, s.pose.yaw);
                let held = self.gesture.is_held(&s.proxy);
                if held {
                    self.sim.hold(&s.proxy, pose).map_err(|e| reject(e.to_string()))?;
                } else if robot.is_held() {
                    self.sim.release(&s.proxy, pose).map_err(|e| reject(e.to_string()))?;
                }
                Ok(Vec::new())
            }
            (Consumer::RobotController, Body::ViewportChange(v)) => {
                v.validate().map_err(|e| reject(e.to_string()))?;
                for (id, target) in self.scenario.targets(v) {
                    self.sim.set_target(&id, target).map_err(|e| reject(e.to_string()))?;
                }
                Ok(Vec::new())
            }
            (Consumer::World, Body::ViewportChange(v)) => {
                v.validate().map_err(|e| reject(e.to_string()))?;
                self.viewport = *v;
                self.viewport_changes += 1;
                Ok(Vec::new())
            }
            (Consumer::Reducer, Body::InteractionEvent(e)) => {
                let (next, effects) = reduce(&self.state, e, &self.binding).map_err(|err| reject(err.to_string()))?;
                self.state = next;
                *self.events.entry(e.kind.name().to_owned()).or_insert(0) += 1;
                if let Err(v) = self.state.check_invariants(&self.binding) {
                    self.violations.push(format!("after {} at {} ms: {v}", e.kind, e.t_ms));
                }
                let delta = self.delta(Some(e.clone()));
                let mut out = vec![self.envelope(t, "reducer", delta)];
                if !effects.is_empty() {
                    out.push(self.envelope(t, "reducer", Body::Effects(Effects { effects })));
                }
                Ok(out)
            }
            (Consumer::Snapshot, Body::SnapshotRequest) => {
                let snap = self.snapshot(true);
                Ok(vec![self.envelope(t, "reducer", Body::Snapshot(Box::new(snap)))])
            }
            (c, _) => Err(reject(format!("{:?} does not consume {:?}", c, env.kind()))),
        }
    }

    fn delta(&self, cause: Option<crate::gesture::InteractionEvent>) -> Body {
        Body::StateDelta(Box::new(StateDelta {
            hash: state_hash(&self.state),
            state: self.state.clone(),
            cause,
        }))
    }

    pub fn snapshot(&self, with_render: bool) -> Snapshot {
        Snapshot {
            state: self.state.clone(),
            hash: state_hash(&self.state),
            viewport: self.viewport,
            robots: self
                .sim
                .robots()
                .iter()
                .map(|r| RobotView {
                    id: r.id.clone(),
                    pose: r.pose,
                    mode: r.mode.name().to_owned(),
                })
                .collect(),
            render: with_render.then(|| render(&self.state, &self.readings, &self.scenario.buildings)),
        }
    }

    pub fn metrics(&self) -> Metrics {
        let sm = self.sim.metrics();
        let cfg = self.sim.config();
        Metrics {
            scenario: self.scenario.id.clone(),
            duration_ms: self.time_ms(),
            ticks: sm.ticks,
            robots: self
                .sim
                .robots()
                .iter()
                .map(|r| {
                    let m = &sm.robots[&r.id];
                    (
                        r.id.clone(),
                        RobotReport {
                            path_length: m.path_length,
                            replans: m.replans,
                            blocked_ticks: m.blocked_ticks,
                            unreachable: m.unreachable,
                            at_target: !r.is_held() && r.at_target(cfg),
                            final_pose: r.pose,
                        },
                    )
                })
                .collect(),
            collisions: sm.collisions,
            boundary_violations: sm.boundary_violations,
            min_separation: sm.min_separation,
            events: self.events.clone(),
            viewport_changes: self.viewport_changes,
            nacks: self.nacks,
            invariant_violations: self.violations.clone(),
            all_at_targets: self.sim.all_at_targets(),
            final_layer: self.state.layer,
            locked: self.state.locked,
            filter: self.state.filter.clone(),
            shoebox_charts: self.state.shoebox.values().map(Vec::len).sum(),
            final_state_hash: state_hash(&self.state),
        }
    }
}
