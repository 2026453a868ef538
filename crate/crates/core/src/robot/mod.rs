//! Simulated proxy carriers: kinematics, planning, path following and the
//! multi-robot tick.

mod grid;
mod kinematics;
mod params;
mod planner;
mod follow;
mod sim;

pub use grid::{Cell, OccupancyGrid};
pub use kinematics::{step_kinematics, Pose2, WheelCommand};
pub use params::{ControlConfig, RobotParams};
pub use planner::{plan, plan_cells, Path, Plan, PlanError, PlanOptions, Reservation};
pub use follow::{align, follow, turn_in_place, FollowStep, Mode};
pub use sim::{
    assign_target, target_for, AssignError, CommandMessage, RobotMetrics, RobotState, SimMetrics, Simulation, Target,
    COLLISION_SLACK,
};

use crate::ids::ProxyId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobotError {
    #[error("invalid robot parameters: {0}")]
    InvalidParams(String),
    #[error("unknown robot {0}")]
    UnknownRobot(ProxyId),
}
