//! Differential-drive kinematics.
//!
//! `v = (v_l + v_r) / 2`, `omega = (v_r - v_l) / wheel_base`. Each step
//! integrates the exact circular arc, so results do not drift with `dt`.

use serde::{Deserialize, Serialize};

use crate::world::{wrap_angle, Point};

/// Planar robot pose in table coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Wheel surface speeds in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelCommand {
    pub v_left: f64,
    pub v_right: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand {
        v_left: 0.0,
        v_right: 0.0,
    };

    pub fn new(v_left: f64, v_right: f64) -> Self {
        Self { v_left, v_right }
    }

    /// Wheel speeds realizing a body velocity `v` and turn rate `omega`.
    pub fn from_twist(v: f64, omega: f64, wheel_base: f64) -> Self {
        let half = omega * wheel_base / 2.0;
        Self {
            v_left: v - half,
            v_right: v + half,
        }
    }

    pub fn is_stop(&self) -> bool {
        self.v_left == 0.0 && self.v_right == 0.0
    }

    /// Scales both wheels by the same factor so neither exceeds `max`.
    pub fn saturate(self, max: f64) -> Self {
        let peak = self.v_left.abs().max(self.v_right.abs());
        if peak <= max {
            self
        } else {
            let k = max / peak;
            Self {
                v_left: self.v_left * k,
                v_right: self.v_right * k,
            }
        }
    }
}

/// Advances `pose` by `dt` seconds along the arc traced by `cmd`.
pub fn step_kinematics(pose: Pose2, cmd: WheelCommand, wheel_base: f64, dt: f64) -> Pose2 {
    let v = (cmd.v_left + cmd.v_right) / 2.0;
    let omega = (cmd.v_right - cmd.v_left) / wheel_base;
    let dtheta = omega * dt;
    if dtheta.abs() < 1e-12 {
        let (s, c) = pose.yaw.sin_cos();
        return Pose2::new(pose.x + v * dt * c, pose.y + v * dt * s, wrap_angle(pose.yaw + dtheta));
    }
    let r = v / omega;
    let yaw1 = pose.yaw + dtheta;
    Pose2::new(
        pose.x + r * (yaw1.sin() - pose.yaw.sin()),
        pose.y - r * (yaw1.cos() - pose.yaw.cos()),
        wrap_angle(yaw1),
    )
}
