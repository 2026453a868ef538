//! Grid A* with prioritized time-window reservations, then string pulling.
//!
//! The search runs over (cell, step) states. One step moves to a 4-neighbor
//! or waits in place and lasts `cell_size / speed` seconds. Once every
//! reservation has expired the time axis collapses, so without reservations
//! this is plain A* and returns BFS-optimal cell paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, OccupancyGrid};
use crate::world::Point;

/// Upper bound on the time axis, in steps.
const MAX_HORIZON: usize = 600;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point>,
    pub total_length: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Point>) -> Self {
        let total_length = waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self {
            waypoints,
            total_length,
        }
    }

    pub fn goal(&self) -> Option<Point> {
        self.waypoints.last().copied()
    }

    /// Point reached after traveling `s` meters along the path.
    pub fn point_at(&self, s: f64) -> Point {
        let mut left = s.max(0.0);
        for w in self.waypoints.windows(2) {
            let seg = w[0].distance(w[1]);
            if left <= seg && seg > 0.0 {
                let t = left / seg;
                return Point::new(w[0].x + (w[1].x - w[0].x) * t, w[0].y + (w[1].y - w[0].y) * t);
            }
            left -= seg;
        }
        self.waypoints.last().copied().unwrap_or_default()
    }
}

/// Another robot's committed route: it traverses `path` at `speed`
/// starting `start_time` seconds from now (negative if already under way).
#[derive(Debug, Clone, PartialEq)]
pub struct Reservation {
    pub path: Path,
    pub start_time: f64,
    pub speed: f64,
}

impl Reservation {
    pub fn position_at(&self, t: f64) -> Point {
        self.path.point_at((t - self.start_time) * self.speed)
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.path.total_length / self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Nominal travel speed used to time steps.
    pub speed: f64,
    /// Center distance kept from reserved positions.
    pub separation: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            speed: 0.12,
            separation: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub path: Path,
    /// Cell route before smoothing, waits removed.
    pub cells: Vec<Cell>,
    /// Steps taken by the search, waits included.
    pub cost: usize,
    /// Seconds to wait at the start before departing.
    pub departure_delay: f64,
    /// The goal actually used; differs from the request when it was snapped.
    pub goal: Point,
    pub snapped: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no path to goal")]
    Blocked,
    #[error("start lies outside the grid")]
    StartOutside,
    #[error("no free cell to use as goal")]
    NoFreeCell,
}

/// Plans from `start` to `goal` in metric coordinates.
pub fn plan(
    grid: &OccupancyGrid,
    start: Point,
    goal: Point,
    others: &[Reservation],
    opts: &PlanOptions,
) -> Result<Plan, PlanError> {
    let start_cell = grid.cell_of(start).ok_or(PlanError::StartOutside)?;
    let (goal_cell, goal_point, snapped) = match grid.cell_of(goal) {
        Some(c) if !grid.is_blocked(c) => (c, goal, false),
        _ => {
            let c = grid.nearest_free(goal).ok_or(PlanError::NoFreeCell)?;
            (c, grid.center(c), true)
        }
    };
    if start.distance(goal_point) == 0.0 {
        return Ok(Plan {
            path: Path::new(vec![start]),
            cells: vec![start_cell],
            cost: 0,
            departure_delay: 0.0,
            goal: goal_point,
            snapped,
        });
    }
    // reservations already too close at t = 0 are left to the runtime guard
    let active: Vec<&Reservation> = others
        .iter()
        .filter(|r| r.position_at(0.0).distance(start) >= opts.separation)
        .collect();
    let steps = search(grid, start_cell, goal_cell, &active, opts).ok_or(PlanError::Blocked)?;
    let step_s = grid.cell_size / opts.speed;
    let leading_waits = steps.windows(2).take_while(|w| w[0] == w[1]).count();
    let mut cells = steps.clone();
    cells.dedup();
    let path = smooth(grid, start, goal_point, &cells);
    Ok(Plan {
        path,
        cells,
        cost: steps.len() - 1,
        departure_delay: leading_waits as f64 * step_s,
        goal: goal_point,
        snapped,
    })
}

/// Cell-level search; returns one cell per step including waits, or `None`
/// when the goal cannot be reached.
pub fn plan_cells(
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    others: &[Reservation],
    opts: &PlanOptions,
) -> Option<Vec<Cell>> {
    let refs: Vec<&Reservation> = others.iter().collect();
    search(grid, start, goal, &refs, opts)
}

fn search(
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    others: &[&Reservation],
    opts: &PlanOptions,
) -> Option<Vec<Cell>> {
    if grid.is_blocked(goal) && goal != start {
        return None;
    }
    if !grid.reachable_from(start)[grid.index(goal)] {
        return None;
    }
    let step_s = grid.cell_size / opts.speed;
    let horizon = others
        .iter()
        .map(|r| (r.end_time() / step_s).ceil().max(0.0) as usize + 1)
        .max()
        .unwrap_or(0)
        .min(MAX_HORIZON);
    // reserved positions sampled at every step end and half step
    let at_end: Vec<Vec<Point>> = (0..=horizon + 1)
        .map(|k| others.iter().map(|r| r.position_at(k as f64 * step_s)).collect())
        .collect();
    let at_mid: Vec<Vec<Point>> = (0..=horizon + 1)
        .map(|k| others.iter().map(|r| r.position_at((k as f64 - 0.5) * step_s)).collect())
        .collect();
    let conflict = |c: Cell, from: Cell, k: usize| -> bool {
        if others.is_empty() {
            return false;
        }
        let k = k.min(horizon + 1);
        let p = grid.center(c);
        let q = grid.center(from);
        let mid = Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
        at_end[k].iter().any(|o| o.distance(p) < opts.separation)
            || at_mid[k].iter().any(|o| o.distance(mid) < opts.separation)
    };
    // earliest step from which the goal stays clear through the horizon
    let goal_clear_from = (0..=horizon)
        .rev()
        .find(|&k| conflict(goal, goal, k))
        .map_or(0, |k| k + 1);

    let ncells = grid.dims().0 * grid.dims().1;
    let layers = horizon + 1;
    let idx = |c: Cell, k: usize| k * ncells + grid.index(c);
    let mut best = vec![usize::MAX; ncells * layers];
    let mut parent = vec![usize::MAX; ncells * layers];
    let h = |c: Cell| c.0.abs_diff(goal.0) + c.1.abs_diff(goal.1);
    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    best[idx(start, 0)] = 0;
    heap.push(Reverse((h(start), h(start), order, start, 0usize, 0usize)));
    while let Some(Reverse((_, _, _, c, k, g))) = heap.pop() {
        if g > best[idx(c, k)] {
            continue;
        }
        if c == goal && k >= goal_clear_from {
            let mut out = vec![c];
            let mut at = idx(c, k);
            while parent[at] != usize::MAX {
                at = parent[at];
                let cell = at % ncells;
                out.push((cell % grid.dims().0, cell / grid.dims().0));
            }
            out.reverse();
            return Some(out);
        }
        let nk = (k + 1).min(horizon);
        let wait = (k < horizon).then_some(c);
        for n in grid.neighbors(c).filter(|&n| !grid.is_blocked(n)).chain(wait) {
            if conflict(n, c, k + 1) {
                continue;
            }
            let ng = g + 1;
            let ni = idx(n, nk);
            if ng < best[ni] {
                best[ni] = ng;
                parent[ni] = idx(c, k);
                order += 1;
                heap.push(Reverse((ng + h(n), h(n), order, n, nk, ng)));
            }
        }
    }
    None
}

/// Removes intermediate cells while the straight line between kept points
/// stays on free cells.
fn smooth(grid: &OccupancyGrid, start: Point, goal: Point, cells: &[Cell]) -> Path {
    let mut pts: Vec<Point> = Vec::with_capacity(cells.len() + 1);
    pts.push(start);
    if cells.len() > 2 {
        pts.extend(cells[1..cells.len() - 1].iter().map(|&c| grid.center(c)));
    }
    pts.push(goal);
    let start_cell = cells.first().copied();
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i < pts.len() - 1 {
        let mut j = pts.len() - 1;
        while j > i + 1 && !grid.line_of_sight(pts[i], pts[j], start_cell) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    Path::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn bfs(grid: &OccupancyGrid, s: Cell, g: Cell) -> Option<usize> {
        let (nx, ny) = grid.dims();
        let mut dist = vec![usize::MAX; nx * ny];
        dist[grid.index(s)] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(c) = q.pop_front() {
            if c == g {
                return Some(dist[grid.index(c)]);
            }
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
                if x < 0 || y < 0 || x >= nx as i64 || y >= ny as i64 {
                    continue;
                }
                let n = (x as usize, y as usize);
                if !grid.is_blocked(n) && dist[grid.index(n)] == usize::MAX {
                    dist[grid.index(n)] = dist[grid.index(c)] + 1;
                    q.push_back(n);
                }
            }
        }
        None
    }

    #[test]
    fn open_grid_matches_bfs() {
        let g = OccupancyGrid::free(10, 10, 1.0);
        let cells = plan_cells(&g, (0, 0), (9, 9), &[], &PlanOptions::default()).unwrap();
        assert_eq!(cells.len() - 1, bfs(&g, (0, 0), (9, 9)).unwrap());
        assert_eq!(cells.len() - 1, 18);
        assert!(cells.windows(2).all(|w| w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1) == 1));
    }

    #[test]
    fn start_equals_goal() {
        let g = OccupancyGrid::free(10, 10, 0.02);
        let p = Point::new(0.05, 0.05);
        let plan = plan(&g, p, p, &[], &PlanOptions::default()).unwrap();
        assert_eq!(plan.path.waypoints, vec![p]);
        assert_eq!(plan.path.total_length, 0.0);
    }

    #[test]
    fn wall_without_gap_blocks() {
        let mut g = OccupancyGrid::free(10, 10, 0.02);
        for y in 0..10 {
            g.set_blocked((5, y), true);
        }
        let r = plan(&g, Point::new(0.01, 0.01), Point::new(0.19, 0.19), &[], &PlanOptions::default());
        assert_eq!(r, Err(PlanError::Blocked));
    }

    #[test]
    fn smoothing_straightens_open_diagonal() {
        let g = OccupancyGrid::free(20, 20, 0.02);
        let (a, b) = (Point::new(0.011, 0.011), Point::new(0.371, 0.251));
        let plan = plan(&g, a, b, &[], &PlanOptions::default()).unwrap();
        assert_eq!(plan.path.waypoints, vec![a, b]);
        assert!((plan.path.total_length - a.distance(b)).abs() < 1e-12);
    }

    #[test]
    fn detours_around_wall_with_gap() {
        let mut g = OccupancyGrid::free(10, 10, 0.02);
        for y in 1..10 {
            g.set_blocked((5, y), true);
        }
        let (a, b) = (Point::new(0.01, 0.19), Point::new(0.19, 0.19));
        let plan = plan(&g, a, b, &[], &PlanOptions::default()).unwrap();
        assert_eq!(plan.cost, bfs(&g, (0, 9), (9, 9)).unwrap());
        for w in plan.path.waypoints.windows(2) {
            assert!(g.line_of_sight(w[0], w[1], None));
        }
        assert!(plan.path.total_length >= a.distance(b));
    }

    #[test]
    fn blocked_goal_is_snapped() {
        let mut g = OccupancyGrid::free(10, 10, 0.02);
        g.set_blocked((9, 9), true);
        let plan = plan(&g, Point::new(0.01, 0.01), Point::new(0.19, 0.19), &[], &PlanOptions::default()).unwrap();
        assert!(plan.snapped);
        assert_ne!(g.cell_of(plan.goal), Some((9, 9)));
    }

    #[test]
    fn respects_reservation_in_time() {
        // the other robot crosses our straight route just as we would get there
        let g = OccupancyGrid::free(20, 20, 0.02);
        let opts = PlanOptions {
            speed: 0.12,
            separation: 0.06,
        };
        let other = Reservation {
            path: Path::new(vec![Point::new(0.21, 0.39), Point::new(0.21, 0.01)]),
            start_time: 0.0,
            speed: 0.12,
        };
        let steps = plan_cells(&g, (0, 10), (19, 10), std::slice::from_ref(&other), &opts).unwrap();
        let tau = 0.02 / 0.12;
        for (k, &c) in steps.iter().enumerate() {
            let d = g.center(c).distance(other.position_at(k as f64 * tau));
            assert!(d >= opts.separation, "step {k}: {d}");
        }
        let free = plan_cells(&g, (0, 10), (19, 10), &[], &opts).unwrap();
        assert!(steps.len() >= free.len());
    }
}
