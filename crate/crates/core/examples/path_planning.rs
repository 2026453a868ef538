//! Prioritized planning on the table grid: the second robot plans around
//! the first one's space-time reservation.

use active_proxy::robot::{plan, ControlConfig, OccupancyGrid, PlanOptions, Reservation, RobotParams};
use active_proxy::world::{Point, Workspace};

fn main() -> anyhow::Result<()> {
    let ws = Workspace::default();
    let params = RobotParams::default();
    let cfg = ControlConfig::default();
    let grid = OccupancyGrid::for_workspace(&ws, cfg.cell_size, cfg.inflation(&params));
    let (nx, ny) = grid.dims();
    println!("grid {nx}×{ny} cells of {} m", cfg.cell_size);

    let opts = PlanOptions::default();
    let first = plan(&grid, Point::new(0.35, 0.30), Point::new(0.95, 0.30), &[], &opts)?;
    println!("P1: {} waypoints, {:.3} m", first.path.waypoints.len(), first.path.total_length);

    let reserved = Reservation {
        path: first.path.clone(),
        start_time: first.departure_delay,
        speed: opts.speed,
    };
    // crossing traffic
    let second = plan(&grid, Point::new(0.55, 0.10), Point::new(0.55, 0.50), &[reserved], &opts)?;
    println!(
        "P2: waits {:.2} s, {} waypoints, {:.3} m",
        second.departure_delay,
        second.path.waypoints.len(),
        second.path.total_length
    );
    // the search itself is time-aware; waits and dodges past the start are
    // left to the runtime guard, so smoothing may straighten them out
    println!(
        "P2 search: {} timed steps over {} distinct cells (unconstrained: {})",
        second.cost,
        second.cells.len(),
        plan(&grid, Point::new(0.55, 0.10), Point::new(0.55, 0.50), &[], &opts)?.cost
    );
    for w in &second.path.waypoints {
        println!("  ({:.3}, {:.3})", w.x, w.y);
    }
    Ok(())
}
