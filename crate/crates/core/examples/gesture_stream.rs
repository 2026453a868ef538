//! Turn a hand-made 6-DoF pose stream into interaction events.
//!
//! A proxy is lifted, carried toward the backdrop, held over a chart until
//! dwell fires, turned clockwise, pitched, and put down again.

use active_proxy::gesture::{magnifier_scale, screen_point, target_of, GestureEngine};
use active_proxy::world::TablePose;
use active_proxy::{ProxyId, Scenario};

fn main() -> anyhow::Result<()> {
    let s = Scenario::demo();
    let mut engine = GestureEngine::new(s.gesture, s.workspace, s.layout)?;
    let p1 = ProxyId::new("P1");

    let mut t = 0;
    let mut pose = TablePose::on_table(0.30, 0.10, 0.0, 0);
    let mut step = |pose: &mut TablePose, f: &dyn Fn(&mut TablePose)| {
        t += 20;
        pose.t_ms = t;
        f(pose);
        engine.ingest(&p1, *pose).unwrap()
    };

    let mut events = Vec::new();
    for _ in 0..10 {
        events.extend(step(&mut pose, &|p| p.z = (p.z + 0.01).min(0.25)));
    }
    for _ in 0..30 {
        events.extend(step(&mut pose, &|p| p.y = (p.y + 0.015).min(0.50)));
    }
    let over = screen_point(&pose, &s.workspace, &s.gesture);
    println!(
        "shadow at u={:.2} v={:.2} → {:?}, magnifier ×{:.2}",
        over.u,
        over.v,
        target_of(over, &s.layout),
        magnifier_scale(s.workspace.distance_to_backdrop(pose.point()), &s.gesture)
    );
    for _ in 0..50 {
        events.extend(step(&mut pose, &|_| {}));
    }
    for _ in 0..25 {
        events.extend(step(&mut pose, &|p| p.yaw -= 0.05));
    }
    for _ in 0..5 {
        events.extend(step(&mut pose, &|p| p.pitch = 0.8));
    }
    for _ in 0..30 {
        events.extend(step(&mut pose, &|p| {
            p.pitch = 0.0;
            p.z = (p.z - 0.01).max(0.0);
        }));
    }

    for e in &events {
        println!("{:>6} ms  {}  {:?}", e.t_ms, e.proxy, e.kind);
    }
    Ok(())
}
