use serde::{Deserialize, Serialize};

use super::RobotError;

/// Physical parameters of one proxy carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    pub radius: f64,
    pub max_wheel_speed: f64,
    pub wheel_base: f64,
    /// Informational only.
    pub mass: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            max_wheel_speed: 0.15,
            wheel_base: 0.08,
            mass: 0.12,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), RobotError> {
        if self.radius > 0.0 && self.max_wheel_speed > 0.0 && self.wheel_base > 0.0 {
            Ok(())
        } else {
            Err(RobotError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn max_turn_rate(&self) -> f64 {
        2.0 * self.max_wheel_speed / self.wheel_base
    }
}

/// Controller, planner and tick settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    /// Simulation step in seconds.
    pub dt: f64,
    /// Wheel-command emission rate.
    pub command_hz: f64,
    pub pos_tol: f64,
    pub yaw_tol_deg: f64,
    pub cell_size: f64,
    /// Extra clearance added to the robot radius when inflating obstacles.
    pub clearance: f64,
    /// Center distance the planner keeps from other robots.
    pub plan_separation: f64,
    /// Center distance below which the runtime guard refuses approaching moves.
    pub guard_separation: f64,
    pub cruise_speed: f64,
    pub lookahead: f64,
    /// Heading error beyond which the follower turns in place.
    pub turn_in_place_rad: f64,
    /// How far outside the navigable region a target may fall and still be clamped.
    pub clamp_tolerance: f64,
    /// Time a robot may be blocked by the guard before it replans around the blocker.
    pub blocked_replan_s: f64,
    pub backoff_cap_s: f64,
    /// Pause after a manual reposition before the robot heads home.
    pub settle_s: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            command_hz: 20.0,
            pos_tol: 0.005,
            yaw_tol_deg: 3.0,
            cell_size: 0.02,
            clearance: 0.01,
            plan_separation: 0.12,
            guard_separation: 0.102,
            cruise_speed: 0.12,
            lookahead: 0.04,
            turn_in_place_rad: 0.6,
            clamp_tolerance: 0.05,
            blocked_replan_s: 0.4,
            backoff_cap_s: 2.0,
            settle_s: 0.3,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self, robot: &RobotParams) -> Result<(), RobotError> {
        let ok = self.dt > 0.0
            && self.dt <= 0.1
            && self.command_hz > 0.0
            && self.pos_tol > 0.0
            && self.yaw_tol_deg > 0.0
            && self.cell_size > 0.0
            && self.clearance >= 0.0
            && self.guard_separation >= 2.0 * robot.radius
            && self.plan_separation >= self.guard_separation
            && self.cruise_speed > 0.0
            && self.cruise_speed <= robot.max_wheel_speed
            && self.lookahead > 0.0;
        if ok {
            Ok(())
        } else {
            Err(RobotError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn yaw_tol(&self) -> f64 {
        self.yaw_tol_deg.to_radians()
    }

    pub fn inflation(&self, robot: &RobotParams) -> f64 {
        robot.radius + self.clearance
    }
}
