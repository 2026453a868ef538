//! Five carriers drive from their dock to the projected building positions,
//! then the map is panned and they re-plan.

use active_proxy::robot::Simulation;
use active_proxy::Scenario;

fn settle(sim: &mut Simulation, max_ticks: usize) -> usize {
    for k in 0..max_ticks {
        sim.tick();
        if sim.all_at_targets() {
            return k + 1;
        }
    }
    max_ticks
}

fn main() -> anyhow::Result<()> {
    let mut s = Scenario::demo();
    let mut sim = Simulation::new(s.workspace, s.robot, s.control, s.starts())?;
    for (id, target) in s.targets(&s.viewport) {
        sim.set_target(&id, target)?;
    }
    let ticks = settle(&mut sim, 5000);
    println!("docked → targets in {:.2} s", ticks as f64 * s.control.dt);

    s.viewport.rotation += 0.4;
    s.viewport.zoom_level *= 0.9;
    for (id, target) in s.targets(&s.viewport) {
        sim.set_target(&id, target)?;
    }
    let ticks = settle(&mut sim, 5000);
    println!("after rotate + zoom: {:.2} s", ticks as f64 * s.control.dt);

    let m = sim.metrics();
    println!("collisions {}, min separation {:?}", m.collisions, m.min_separation);
    for r in sim.robots() {
        let rm = &m.robots[&r.id];
        println!(
            "{}  ({:.3}, {:.3}, {:+.2} rad)  path {:.3} m  replans {}",
            r.id, r.pose.x, r.pose.y, r.pose.yaw, rm.path_length, rm.replans
        );
    }
    Ok(())
}
