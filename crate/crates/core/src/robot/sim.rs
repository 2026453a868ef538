//! The multi-robot world: one tick plans, follows, guards and integrates
//! every carrier in fixed id order.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::follow::{align, follow, turn_in_place, Mode};
use super::grid::OccupancyGrid;
use super::kinematics::{step_kinematics, Pose2, WheelCommand};
use super::params::{ControlConfig, RobotParams};
use super::planner::{plan, Path, PlanError, PlanOptions, Reservation};
use super::RobotError;
use crate::ids::ProxyId;
use crate::world::{geo_to_table, wrap_angle, Building, MapViewport, Workspace};

/// Slack allowed below `2 * radius` before two robots count as colliding.
pub const COLLISION_SLACK: f64 = 0.001;
/// Separation used when a plan with the comfortable separation fails.
const TIGHT_SEPARATION_MARGIN: f64 = 0.008;
/// Sidestep heading: this much outward of the blocker's tangent.
const SIDESTEP_TILT: f64 = 0.15;
const SIDESTEP_ALIGN_RAD: f64 = 0.05;
const SIDESTEP_SPEED: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub pose: Pose2,
    /// The referent projects off the navigable table; `pose` is a parking spot.
    pub unreachable: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignError {
    #[error("target unreachable under viewport; park at ({:.3}, {:.3})", park.x, park.y)]
    Unreachable { park: Pose2 },
}

/// Where a building's carrier belongs under `viewport`.
pub fn assign_target(
    building: &Building,
    viewport: &MapViewport,
    ws: &Workspace,
    robot: &RobotParams,
    cfg: &ControlConfig,
) -> Result<Pose2, AssignError> {
    let raw = geo_to_table(viewport, building.geo_anchor, ws);
    let yaw = wrap_angle(building.home_yaw + viewport.rotation);
    let nav = ws.safe_bounds().shrink(cfg.inflation(robot));
    let clamped = nav.clamp(raw);
    if clamped.distance(raw) <= cfg.clamp_tolerance {
        return Ok(Pose2::new(clamped.x, clamped.y, yaw));
    }
    let grid = OccupancyGrid::for_workspace(ws, cfg.cell_size, cfg.inflation(robot));
    let park = grid.nearest_free(clamped).map_or(clamped, |c| grid.center(c));
    Err(AssignError::Unreachable {
        park: Pose2::new(park.x, park.y, yaw),
    })
}

/// Resolves a target, turning an unreachable one into a flagged parking spot.
pub fn target_for(
    building: &Building,
    viewport: &MapViewport,
    ws: &Workspace,
    robot: &RobotParams,
    cfg: &ControlConfig,
) -> Target {
    match assign_target(building, viewport, ws, robot, cfg) {
        Ok(pose) => Target {
            pose,
            unreachable: false,
        },
        Err(AssignError::Unreachable { park }) => Target {
            pose: park,
            unreachable: true,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: ProxyId,
    pub pose: Pose2,
    #[serde(flatten)]
    pub mode: Mode,
    pub wheel_cmd: WheelCommand,
    pub target: Option<Target>,
    /// The last plan had to snap its goal to a free cell.
    pub parked: bool,
    #[serde(skip)]
    book: Bookkeeping,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Bookkeeping {
    needs_plan: bool,
    depart_at: f64,
    retry_at: f64,
    backoff: f64,
    blocked_for: f64,
    heading_error: f64,
}

impl RobotState {
    fn new(id: ProxyId, pose: Pose2) -> Self {
        Self {
            id,
            pose,
            mode: Mode::Idle,
            wheel_cmd: WheelCommand::STOP,
            target: None,
            parked: false,
            book: Bookkeeping::default(),
        }
    }

    pub fn is_held(&self) -> bool {
        self.mode == Mode::Held
    }

    /// Within tolerance of the target (trivially true without one).
    pub fn at_target(&self, cfg: &ControlConfig) -> bool {
        self.target.is_none_or(|t| {
            self.pose.point().distance(t.pose.point()) <= cfg.pos_tol
                && wrap_angle(t.pose.yaw - self.pose.yaw).abs() <= cfg.yaw_tol()
        })
    }

    fn remaining_path(&self) -> Option<Path> {
        match &self.mode {
            Mode::Navigating { path, index } => {
                let mut pts = vec![self.pose.point()];
                pts.extend(path.waypoints.iter().skip(index + 1));
                Some(Path::new(pts))
            }
            _ => None,
        }
    }
}

/// A wheel command addressed to one robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandMessage {
    pub t_ms: u64,
    pub robot: ProxyId,
    pub cmd: WheelCommand,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotMetrics {
    pub path_length: f64,
    pub replans: u32,
    pub blocked_ticks: u64,
    pub unreachable: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimMetrics {
    pub ticks: u64,
    pub robots: BTreeMap<ProxyId, RobotMetrics>,
    pub collisions: u64,
    pub boundary_violations: u64,
    /// Smallest center distance seen between two robots on the table.
    pub min_separation: Option<f64>,
}

pub struct Simulation {
    ws: Workspace,
    params: RobotParams,
    cfg: ControlConfig,
    base_grid: OccupancyGrid,
    robots: Vec<RobotState>,
    time: f64,
    ticks: u64,
    last_emitted: Vec<WheelCommand>,
    /// Pairs placed overlapping by hand; ignored until they separate.
    exempt: BTreeSet<(usize, usize)>,
    metrics: SimMetrics,
}

impl Simulation {
    pub fn new(
        ws: Workspace,
        params: RobotParams,
        cfg: ControlConfig,
        starts: impl IntoIterator<Item = (ProxyId, Pose2)>,
    ) -> Result<Self, RobotError> {
        params.validate()?;
        cfg.validate(&params)?;
        let mut robots: Vec<RobotState> = starts.into_iter().map(|(id, p)| RobotState::new(id, p)).collect();
        robots.sort_by(|a, b| a.id.cmp(&b.id));
        if robots.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(RobotError::InvalidParams("duplicate robot id".into()));
        }
        let metrics = SimMetrics {
            robots: robots.iter().map(|r| (r.id.clone(), RobotMetrics::default())).collect(),
            ..Default::default()
        };
        let mut sim = Self {
            base_grid: OccupancyGrid::for_workspace(&ws, cfg.cell_size, cfg.inflation(&params)),
            ws,
            params,
            cfg,
            last_emitted: vec![WheelCommand::STOP; robots.len()],
            robots,
            time: 0.0,
            ticks: 0,
            exempt: BTreeSet::new(),
            metrics,
        };
        sim.refresh_exemptions();
        Ok(sim)
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn params(&self) -> &RobotParams {
        &self.params
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.base_grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn robot(&self, id: &ProxyId) -> Option<&RobotState> {
        self.index_of(id).map(|i| &self.robots[i])
    }

    pub fn metrics(&self) -> &SimMetrics {
        &self.metrics
    }

    pub fn all_at_targets(&self) -> bool {
        self.robots.iter().all(|r| !r.is_held() && r.at_target(&self.cfg))
    }

    fn index_of(&self, id: &ProxyId) -> Option<usize> {
        self.robots.binary_search_by(|r| r.id.cmp(id)).ok()
    }

    fn get(&mut self, id: &ProxyId) -> Result<usize, RobotError> {
        self.index_of(id).ok_or_else(|| RobotError::UnknownRobot(id.clone()))
    }

    /// Sets where a robot should be. A changed target triggers exactly one
    /// replan on the next tick.
    pub fn set_target(&mut self, id: &ProxyId, target: Target) -> Result<(), RobotError> {
        let i = self.get(id)?;
        let cfg = self.cfg;
        let r = &mut self.robots[i];
        let changed = r.target.is_none_or(|old| {
            old.pose.point().distance(target.pose.point()) > cfg.pos_tol * 0.01
                || wrap_angle(old.pose.yaw - target.pose.yaw).abs() > 1e-9
        });
        self.metrics.robots.get_mut(id).expect("metrics per robot").unreachable = target.unreachable;
        r.target = Some(target);
        if changed && !r.is_held() {
            r.book.needs_plan = true;
            r.book.backoff = 0.0;
        }
        Ok(())
    }

    /// The proxy was lifted: motors stop at once and the pose follows the hand.
    pub fn hold(&mut self, id: &ProxyId, pose: Pose2) -> Result<(), RobotError> {
        let i = self.get(id)?;
        let r = &mut self.robots[i];
        r.pose = pose;
        r.mode = Mode::Held;
        r.wheel_cmd = WheelCommand::STOP;
        r.book.needs_plan = false;
        Ok(())
    }

    /// The proxy was put down at `pose`; it heads back if that is wrong.
    pub fn release(&mut self, id: &ProxyId, pose: Pose2) -> Result<(), RobotError> {
        let i = self.get(id)?;
        let r = &mut self.robots[i];
        r.pose = pose;
        r.mode = Mode::Idle;
        r.book = Bookkeeping {
            needs_plan: true,
            ..Bookkeeping::default()
        };
        r.book.retry_at = self.time;
        self.refresh_exemptions();
        Ok(())
    }

    /// The proxy was slid to `pose` without lifting it: pause, then return.
    pub fn reposition(&mut self, id: &ProxyId, pose: Pose2) -> Result<(), RobotError> {
        let i = self.get(id)?;
        let until = self.time + self.cfg.settle_s;
        let r = &mut self.robots[i];
        r.pose = pose;
        r.mode = Mode::Halted { until };
        r.wheel_cmd = WheelCommand::STOP;
        r.book.needs_plan = true;
        self.refresh_exemptions();
        Ok(())
    }

    fn refresh_exemptions(&mut self) {
        let min = 2.0 * self.params.radius - COLLISION_SLACK;
        for i in 0..self.robots.len() {
            for j in i + 1..self.robots.len() {
                if self.robots[i].pose.point().distance(self.robots[j].pose.point()) < min {
                    self.exempt.insert((i, j));
                }
            }
        }
    }

    /// Advances the world by one `cfg.dt` step and returns the wheel
    /// commands to transmit.
    pub fn tick(&mut self) -> Vec<CommandMessage> {
        let dt = self.cfg.dt;
        for i in 0..self.robots.len() {
            self.update_mode(i);
            let cmd = self.command_for(i);
            self.apply(i, cmd, dt);
        }
        self.time += dt;
        self.ticks += 1;
        self.metrics.ticks = self.ticks;
        self.check_safety();
        self.emit()
    }

    fn update_mode(&mut self, i: usize) {
        let cfg = self.cfg;
        let now = self.time;
        let r = &mut self.robots[i];
        match r.mode {
            Mode::Held => return,
            Mode::Halted { until } if now + 1e-9 < until => return,
            Mode::Halted { .. } => r.mode = Mode::Idle,
            _ => {}
        }
        let Some(target) = r.target else { return };
        let idle = r.mode == Mode::Idle;
        let misaligned = !r.at_target(&cfg);
        let due = r.book.needs_plan || (idle && misaligned && now + 1e-9 >= r.book.retry_at);
        if !due {
            return;
        }
        r.book.needs_plan = false;
        let off = r.pose.point().distance(target.pose.point()) > cfg.pos_tol;
        if off {
            self.replan(i, false);
        } else if wrap_angle(target.pose.yaw - r.pose.yaw).abs() > cfg.yaw_tol() {
            r.mode = Mode::AligningYaw {
                target_yaw: target.pose.yaw,
            };
        } else {
            r.mode = Mode::Idle;
        }
    }

    /// Plans robot `i` to its target. Robots already under way are
    /// reservations; the rest are obstacles. With `stalled`, every other
    /// robot is treated as an obstacle.
    fn replan(&mut self, i: usize, stalled: bool) {
        let cfg = self.cfg;
        let Some(target) = self.robots[i].target else { return };
        let start = self.robots[i].pose.point();
        let attempt = |separation: f64| {
            let mut grid = self.base_grid.clone();
            let mut reservations = Vec::new();
            for (j, other) in self.robots.iter().enumerate() {
                if j == i || other.is_held() {
                    continue;
                }
                match other.remaining_path() {
                    Some(path) if !stalled && other.book.blocked_for == 0.0 => reservations.push(Reservation {
                        path,
                        start_time: (other.book.depart_at - self.time).max(0.0),
                        speed: cfg.cruise_speed,
                    }),
                    // never seal a robot in: a neighbor already closer than
                    // `separation` only blocks what is closer still
                    _ => {
                        let gap = other.pose.point().distance(start);
                        grid.block_disc(other.pose.point(), separation.min(gap - 1e-6));
                    }
                }
            }
            let opts = PlanOptions {
                speed: cfg.cruise_speed,
                separation,
            };
            plan(&grid, start, target.pose.point(), &reservations, &opts)
        };
        let result = match attempt(cfg.plan_separation) {
            Err(PlanError::Blocked) => attempt(cfg.guard_separation + TIGHT_SEPARATION_MARGIN),
            other => other,
        };
        let now = self.time;
        let r = &mut self.robots[i];
        let m = self.metrics.robots.get_mut(&r.id).expect("metrics per robot");
        match result {
            Ok(p) => {
                m.replans += 1;
                r.parked = p.snapped;
                r.book.depart_at = now + p.departure_delay;
                r.book.blocked_for = 0.0;
                if p.snapped {
                    r.book.backoff = next_backoff(r.book.backoff, &cfg);
                    r.book.retry_at = now + r.book.backoff;
                } else {
                    r.book.backoff = 0.0;
                }
                r.mode = Mode::Navigating { path: p.path, index: 0 };
            }
            Err(_) => {
                r.mode = Mode::Idle;
                r.book.backoff = next_backoff(r.book.backoff, &cfg);
                r.book.retry_at = now + r.book.backoff;
            }
        }
    }

    fn command_for(&mut self, i: usize) -> WheelCommand {
        let (params, cfg, now) = (self.params, self.cfg, self.time);
        let r = &mut self.robots[i];
        let target_yaw = r.target.map(|t| t.pose.yaw);
        match &mut r.mode {
            Mode::Navigating { path, index } => {
                if now + 1e-9 < r.book.depart_at {
                    return WheelCommand::STOP;
                }
                let step = follow(r.pose, path, index, &params, &cfg);
                r.book.heading_error = step.heading_error;
                let (cmd, done) = (step.cmd, step.done);
                if done {
                    r.mode = match target_yaw {
                        Some(yaw) => Mode::AligningYaw { target_yaw: yaw },
                        None => Mode::Idle,
                    };
                }
                cmd
            }
            Mode::AligningYaw { target_yaw } => {
                let (cmd, done) = align(r.pose, *target_yaw, &params, &cfg);
                if done {
                    r.mode = Mode::Idle;
                }
                cmd
            }
            _ => WheelCommand::STOP,
        }
    }

    fn apply(&mut self, i: usize, cmd: WheelCommand, dt: f64) {
        if self.robots[i].is_held() {
            self.robots[i].wheel_cmd = WheelCommand::STOP;
            return;
        }
        let cmd = cmd.saturate(self.params.max_wheel_speed);
        let old = self.robots[i].pose;
        let next = step_kinematics(old, cmd, self.params.wheel_base, dt);
        let blockers = self.blockers(i, old, next);
        if blockers.is_empty() {
            self.commit(i, next, cmd);
            if old.point() != self.robots[i].pose.point() {
                self.robots[i].book.blocked_for = 0.0;
            }
            return;
        }
        match self.sidestep(i, blockers[0]) {
            Some(alt) => {
                let next = step_kinematics(old, alt, self.params.wheel_base, dt);
                if self.blockers(i, old, next).is_empty() {
                    self.commit(i, next, alt);
                } else {
                    self.robots[i].wheel_cmd = WheelCommand::STOP;
                }
            }
            None => self.robots[i].wheel_cmd = WheelCommand::STOP,
        }
        let r = &mut self.robots[i];
        r.book.blocked_for += dt;
        self.metrics.robots.get_mut(&r.id).expect("metrics per robot").blocked_ticks += 1;
        if r.book.blocked_for > self.cfg.blocked_replan_s {
            // a higher-priority robot on the move gets to sort it out
            let yield_to_other = blockers
                .iter()
                .any(|&j| j < i && matches!(self.robots[j].mode, Mode::Navigating { .. }));
            if !yield_to_other {
                self.replan(i, true);
            }
            // keep the stall visible to others until this robot moves freely
            self.robots[i].book.blocked_for = dt;
        }
    }

    /// Robots that the move `old` -> `next` of robot `i` would approach
    /// closer than the guard distance, nearest first.
    fn blockers(&self, i: usize, old: Pose2, next: Pose2) -> Vec<usize> {
        let guard = self.cfg.guard_separation;
        let mut out: Vec<(f64, usize)> = self
            .robots
            .iter()
            .enumerate()
            .filter(|&(j, o)| j != i && !o.is_held())
            .filter_map(|(j, o)| {
                let before = old.point().distance(o.pose.point());
                let after = next.point().distance(o.pose.point());
                (after < before.min(guard)).then_some((before, j))
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.into_iter().map(|(_, j)| j).collect()
    }

    /// A move that makes progress without closing in on `blocker`: turn to
    /// the tangent of the blocker nearest the desired bearing, then creep
    /// along it, slightly outward.
    fn sidestep(&self, i: usize, blocker: usize) -> Option<WheelCommand> {
        let r = &self.robots[i];
        if !matches!(r.mode, Mode::Navigating { .. }) {
            return None;
        }
        let o = self.robots[blocker].pose;
        let away = (r.pose.y - o.y).atan2(r.pose.x - o.x);
        let desired = r.pose.yaw + r.book.heading_error;
        let heading = if wrap_angle(desired - away).abs() <= FRAC_PI_2 - SIDESTEP_TILT {
            desired
        } else {
            let left = away + FRAC_PI_2 - SIDESTEP_TILT;
            let right = away - FRAC_PI_2 + SIDESTEP_TILT;
            if wrap_angle(desired - left).abs() <= wrap_angle(desired - right).abs() {
                left
            } else {
                right
            }
        };
        let err = wrap_angle(heading - r.pose.yaw);
        Some(if err.abs() > SIDESTEP_ALIGN_RAD {
            turn_in_place(err, &self.params)
        } else {
            WheelCommand::new(SIDESTEP_SPEED, SIDESTEP_SPEED)
        })
    }

    /// Moves robot `i` to `next`, clamping (and counting) boundary escapes.
    fn commit(&mut self, i: usize, mut next: Pose2, cmd: WheelCommand) {
        let safe = self.ws.safe_bounds();
        if !safe.contains(next.point()) {
            let p = safe.clamp(next.point());
            next.x = p.x;
            next.y = p.y;
            self.metrics.boundary_violations += 1;
        }
        let r = &mut self.robots[i];
        let moved = r.pose.point().distance(next.point());
        r.pose = next;
        r.wheel_cmd = cmd;
        self.metrics.robots.get_mut(&r.id).expect("metrics per robot").path_length += moved;
    }

    fn check_safety(&mut self) {
        let min = 2.0 * self.params.radius - COLLISION_SLACK;
        for i in 0..self.robots.len() {
            if self.robots[i].is_held() {
                continue;
            }
            for j in i + 1..self.robots.len() {
                if self.robots[j].is_held() {
                    continue;
                }
                let d = self.robots[i].pose.point().distance(self.robots[j].pose.point());
                if self.exempt.contains(&(i, j)) {
                    if d >= 2.0 * self.params.radius {
                        self.exempt.remove(&(i, j));
                    }
                    continue;
                }
                self.metrics.min_separation = Some(self.metrics.min_separation.map_or(d, |m| m.min(d)));
                if d < min {
                    self.metrics.collisions += 1;
                }
            }
        }
    }

    /// Stops go out immediately; other changes at the command rate.
    fn emit(&mut self) -> Vec<CommandMessage> {
        let every = ((1.0 / (self.cfg.command_hz * self.cfg.dt)).round() as u64).max(1);
        let periodic = self.ticks % every == 0;
        let t_ms = (self.time * 1000.0).round() as u64;
        let mut out = Vec::new();
        for (i, r) in self.robots.iter().enumerate() {
            let cmd = r.wheel_cmd;
            let changed = cmd != self.last_emitted[i];
            if changed && (periodic || cmd.is_stop()) {
                self.last_emitted[i] = cmd;
                out.push(CommandMessage {
                    t_ms,
                    robot: r.id.clone(),
                    cmd,
                });
            }
        }
        out
    }
}

fn next_backoff(current: f64, cfg: &ControlConfig) -> f64 {
    if current <= 0.0 {
        cfg.dt
    } else {
        (current * 2.0).min(cfg.backoff_cap_s)
    }
}
