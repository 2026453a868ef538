//! Exact-arc integration of a differential drive against small-step Euler.

use active_proxy::robot::{step_kinematics, Pose2, RobotParams, WheelCommand};

fn main() {
    let params = RobotParams::default();
    let cmd = WheelCommand {
        v_left: 0.05,
        v_right: 0.12,
    };
    let start = Pose2::new(0.5, 0.3, 0.0);

    let mut arc = start;
    for _ in 0..100 {
        arc = step_kinematics(arc, cmd, params.wheel_base, 0.01);
    }
    let once = step_kinematics(start, cmd, params.wheel_base, 1.0);

    let v = (cmd.v_left + cmd.v_right) / 2.0;
    let w = (cmd.v_right - cmd.v_left) / params.wheel_base;
    let mut e = start;
    for _ in 0..100_000 {
        e.x += v * e.yaw.cos() * 1e-5;
        e.y += v * e.yaw.sin() * 1e-5;
        e.yaw += w * 1e-5;
    }
    println!("100 arcs of 10 ms: {arc:?}");
    println!("one 1 s arc:       {once:?}");
    println!("Euler, dt = 1e-5:  ({:.6}, {:.6}, {:.6})", e.x, e.y, e.yaw);
    println!("gap {:.2e} m", ((once.x - e.x).powi(2) + (once.y - e.y).powi(2)).sqrt());
}
