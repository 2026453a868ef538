//! Pure-pursuit path tracking with turn-then-drive and final yaw alignment.

use serde::{Deserialize, Serialize};

use super::kinematics::{Pose2, WheelCommand};
use super::params::{ControlConfig, RobotParams};
use super::planner::Path;
use crate::world::{wrap_angle, Point};

/// Fraction of the tolerances used as the stopping threshold, so a robot
/// that stops is comfortably inside the tolerance band.
const REACH_FRACTION: f64 = 0.6;
const SLOWDOWN_GAIN: f64 = 1.5;
const MIN_SPEED: f64 = 0.01;
const TURN_GAIN: f64 = 4.0;
const MIN_TURN_RATE: f64 = 0.3;
/// How far ahead of the current progress point the tracker looks for a
/// closer segment.
const PROGRESS_WINDOW: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Idle,
    Navigating { path: Path, index: usize },
    AligningYaw { target_yaw: f64 },
    Held,
    Halted { until: f64 },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Idle => "idle",
            Mode::Navigating { .. } => "navigating",
            Mode::AligningYaw { .. } => "aligning_yaw",
            Mode::Held => "held",
            Mode::Halted { .. } => "halted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowStep {
    pub cmd: WheelCommand,
    /// The final waypoint is reached.
    pub done: bool,
    /// Bearing of the lookahead point relative to the current heading.
    pub heading_error: f64,
}

impl FollowStep {
    fn arrived() -> Self {
        Self {
            cmd: WheelCommand::STOP,
            done: true,
            heading_error: 0.0,
        }
    }
}

/// Tracks `path` from `pose`, advancing `index` (the segment being followed).
pub fn follow(pose: Pose2, path: &Path, index: &mut usize, robot: &RobotParams, cfg: &ControlConfig) -> FollowStep {
    let Some(goal) = path.goal() else {
        return FollowStep::arrived();
    };
    let here = pose.point();
    let d_goal = here.distance(goal);
    if d_goal < cfg.pos_tol * REACH_FRACTION {
        return FollowStep::arrived();
    }
    let w = &path.waypoints;
    // progress: nearest point on the segments ahead, within a short window
    let mut seg_start: f64 = w.windows(2).take(*index).map(|s| s[0].distance(s[1])).sum();
    let mut best = (f64::INFINITY, *index, seg_start);
    for k in *index..w.len().saturating_sub(1) {
        let (a, b) = (w[k], w[k + 1]);
        let seg = a.distance(b);
        let t = project(here, a, b);
        let q = Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
        let d = here.distance(q);
        if d < best.0 - 1e-12 {
            best = (d, k, seg_start + seg * t);
        }
        seg_start += seg;
        if seg_start - best.2 > PROGRESS_WINDOW {
            break;
        }
    }
    *index = best.1;
    // carrot: first point ahead that is at least one lookahead away
    let mut s_at = best.2;
    let carrot = loop {
        if s_at >= path.total_length {
            break goal;
        }
        let p = path.point_at(s_at);
        if p.distance(here) >= cfg.lookahead {
            break p;
        }
        s_at += cfg.lookahead / 8.0;
    };
    let heading_error = wrap_angle((carrot.y - pose.y).atan2(carrot.x - pose.x) - pose.yaw);
    FollowStep {
        cmd: steer(heading_error, here.distance(carrot), d_goal, robot, cfg),
        done: false,
        heading_error,
    }
}

fn project(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 1.0;
    }
    (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
}

/// Drives toward a point at bearing `alpha` and distance `dist`, turning in
/// place first when the bearing is large.
fn steer(alpha: f64, dist: f64, d_goal: f64, robot: &RobotParams, cfg: &ControlConfig) -> WheelCommand {
    if alpha.abs() > cfg.turn_in_place_rad {
        return turn_in_place(alpha, robot);
    }
    let v = (SLOWDOWN_GAIN * d_goal).clamp(MIN_SPEED, cfg.cruise_speed);
    let curvature = if dist > 1e-9 { 2.0 * alpha.sin() / dist } else { 0.0 };
    let cmd = WheelCommand::from_twist(v, v * curvature, robot.wheel_base);
    cmd.saturate(robot.max_wheel_speed)
}

/// In-place rotation reducing heading error `err`.
pub fn turn_in_place(err: f64, robot: &RobotParams) -> WheelCommand {
    let max = robot.max_turn_rate() * 0.8;
    let omega = (TURN_GAIN * err.abs()).clamp(MIN_TURN_RATE.min(max), max).copysign(err);
    let half = omega * robot.wheel_base / 2.0;
    WheelCommand::new(-half, half)
}

/// Rotation toward `target_yaw`; `true` once within the stopping threshold.
pub fn align(pose: Pose2, target_yaw: f64, robot: &RobotParams, cfg: &ControlConfig) -> (WheelCommand, bool) {
    let err = wrap_angle(target_yaw - pose.yaw);
    if err.abs() < cfg.yaw_tol() * REACH_FRACTION {
        (WheelCommand::STOP, true)
    } else {
        (turn_in_place(err, robot), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::kinematics::step_kinematics;
    use std::f64::consts::PI;

    fn setup() -> (RobotParams, ControlConfig) {
        (RobotParams::default(), ControlConfig::default())
    }

    #[test]
    fn aligned_on_segment_drives_straight() {
        let (r, c) = setup();
        let path = Path::new(vec![Point::new(0.1, 0.1), Point::new(0.6, 0.1)]);
        let mut i = 0;
        let step = follow(Pose2::new(0.2, 0.1, 0.0), &path, &mut i, &r, &c);
        assert!(!step.done);
        assert_eq!(step.cmd.v_left, step.cmd.v_right);
        assert!(step.cmd.v_left > 0.0);
    }

    #[test]
    fn target_behind_turns_in_place() {
        let (r, c) = setup();
        let path = Path::new(vec![Point::new(0.3, 0.1), Point::new(0.1, 0.1)]);
        let mut i = 0;
        let cmd = follow(Pose2::new(0.3, 0.1, 0.0), &path, &mut i, &r, &c).cmd;
        assert_eq!(cmd.v_left, -cmd.v_right);
        assert!(cmd.v_left.abs() <= r.max_wheel_speed);
    }

    #[test]
    fn commands_stay_within_wheel_limits() {
        let (r, c) = setup();
        let path = Path::new(vec![Point::new(0.1, 0.1), Point::new(0.5, 0.4), Point::new(0.9, 0.1)]);
        for k in 0..64 {
            let yaw = -PI + k as f64 * PI / 32.0;
            let mut i = 0;
            let cmd = follow(Pose2::new(0.15, 0.12, yaw), &path, &mut i, &r, &c).cmd;
            assert!(cmd.v_left.abs() <= r.max_wheel_speed + 1e-12);
            assert!(cmd.v_right.abs() <= r.max_wheel_speed + 1e-12);
        }
    }

    /// Closed loop from rest to goal, then yaw alignment.
    fn run(dt: f64) -> (Pose2, f64) {
        let (r, c) = setup();
        let path = Path::new(vec![Point::new(0.12, 0.1), Point::new(0.5, 0.1), Point::new(0.8, 0.45)]);
        let mut pose = Pose2::new(0.12, 0.1, 2.0);
        let mut i = 0;
        let mut t = 0.0;
        let target_yaw = -1.0;
        let mut aligning = false;
        while t < 60.0 {
            let cmd = if aligning {
                let (cmd, done) = align(pose, target_yaw, &r, &c);
                if done {
                    break;
                }
                cmd
            } else {
                let step = follow(pose, &path, &mut i, &r, &c);
                aligning = step.done;
                step.cmd
            };
            pose = step_kinematics(pose, cmd, r.wheel_base, dt);
            t += dt;
        }
        (pose, t)
    }

    #[test]
    fn converges_at_both_step_sizes() {
        let (coarse, t1) = run(0.01);
        let (fine, t2) = run(0.001);
        let goal = Point::new(0.8, 0.45);
        for (p, t) in [(coarse, t1), (fine, t2)] {
            assert!(t < 60.0);
            assert!(p.point().distance(goal) < 0.005, "{p:?}");
            assert!(wrap_angle(p.yaw + 1.0).abs() < 3f64.to_radians());
        }
        assert!(coarse.point().distance(fine.point()) < 0.005);
        assert!((t1 - t2).abs() < 1.0, "{t1} vs {t2}");
    }
}
