//! Randomized multi-robot scenarios with an independent safety oracle.

use active_proxy::robot::{ControlConfig, Pose2, RobotParams, Simulation, Target};
use active_proxy::world::{wrap_angle, Point, Workspace};
use active_proxy::ProxyId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ROBOTS: usize = 5;
pub const TICKS: usize = 10_000;

#[derive(Debug, Clone)]
enum Action {
    Pan { dx: f64, dy: f64, dyaw: f64 },
    Lift { robot: usize },
    Place { robot: usize },
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub boundary_violations: usize,
    pub collisions: usize,
    pub min_distance: f64,
    /// Robots not within tolerance of their target at the end.
    pub unconverged: Vec<String>,
    pub converged_at: Option<f64>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.boundary_violations == 0 && self.collisions == 0 && self.unconverged.is_empty()
    }
}

fn spaced_points(rng: &mut ChaCha8Rng, n: usize, lo: Point, hi: Point, min_gap: f64, avoid: &[Point]) -> Vec<Point> {
    'outer: loop {
        let mut pts: Vec<Point> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut tries = 0;
            loop {
                tries += 1;
                if tries > 500 {
                    continue 'outer;
                }
                let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
                if pts.iter().chain(avoid).all(|q| q.distance(p) >= min_gap) {
                    pts.push(p);
                    break;
                }
            }
        }
        return pts;
    }
}

pub fn run(seed: u64) -> Outcome {
    let ws = Workspace::default();
    let params = RobotParams::default();
    let cfg = ControlConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nav = ws.safe_bounds().shrink(cfg.inflation(&params));
    let pan = 0.06;
    let targets = spaced_points(
        &mut rng,
        ROBOTS,
        Point::new(nav.min_x + pan, nav.min_y + pan),
        Point::new(nav.max_x - pan, nav.max_y - pan),
        0.25,
        &[],
    );
    let starts = spaced_points(
        &mut rng,
        ROBOTS,
        Point::new(nav.min_x, nav.min_y),
        Point::new(nav.max_x, nav.max_y),
        0.11,
        &[],
    );
    let ids: Vec<ProxyId> = (1..=ROBOTS).map(|i| ProxyId::new(format!("P{i}"))).collect();
    let mut sim = Simulation::new(
        ws,
        params,
        cfg,
        ids.iter().cloned().zip(
            starts
                .iter()
                .map(|p| Pose2::new(p.x, p.y, rng.random_range(-3.1..3.1))),
        ),
    )
    .expect("valid simulation");
    let mut yaws: Vec<f64> = (0..ROBOTS).map(|_| rng.random_range(-3.1..3.1)).collect();
    let mut offset = (0.0, 0.0);
    let set_targets = |sim: &mut Simulation, offset: (f64, f64), yaws: &[f64]| {
        for (i, id) in ids.iter().enumerate() {
            let p = targets[i];
            let pose = Pose2::new(p.x + offset.0, p.y + offset.1, yaws[i]);
            sim.set_target(id, Target { pose, unreachable: false }).unwrap();
        }
    };
    set_targets(&mut sim, offset, &yaws);

    // user activity in the first fifth of the run
    let mut schedule: Vec<(usize, Action)> = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let tick = rng.random_range(0..TICKS / 5);
        schedule.push((
            tick,
            Action::Pan {
                dx: rng.random_range(-pan..pan),
                dy: rng.random_range(-pan..pan),
                dyaw: rng.random_range(-1.5..1.5),
            },
        ));
    }
    for _ in 0..rng.random_range(1..=3) {
        let robot = rng.random_range(0..ROBOTS);
        let tick = rng.random_range(0..TICKS / 6);
        let hold = rng.random_range(50..200);
        schedule.push((tick, Action::Lift { robot }));
        schedule.push((tick + hold, Action::Place { robot }));
    }
    schedule.sort_by_key(|(t, _)| *t);

    let mut held = vec![false; ROBOTS];
    let mut out = Outcome {
        min_distance: f64::INFINITY,
        ..Default::default()
    };
    let safe = ws.safe_bounds();
    let min_gap = 2.0 * params.radius - 0.001;
    let mut next = 0;
    for tick in 0..TICKS {
        while next < schedule.len() && schedule[next].0 == tick {
            match schedule[next].1 {
                Action::Pan { dx, dy, dyaw } => {
                    offset = (dx, dy);
                    for y in yaws.iter_mut() {
                        *y = wrap_angle(*y + dyaw);
                    }
                    set_targets(&mut sim, offset, &yaws);
                }
                Action::Lift { robot } if !held[robot] => {
                    let mut p = sim.robots()[robot].pose;
                    p.yaw = wrap_angle(p.yaw + 0.5);
                    sim.hold(&ids[robot], p).unwrap();
                    held[robot] = true;
                }
                Action::Place { robot } if held[robot] => {
                    let others: Vec<Point> = sim
                        .robots()
                        .iter()
                        .enumerate()
                        .filter(|(j, r)| *j != robot && !r.is_held())
                        .map(|(_, r)| r.pose.point())
                        .collect();
                    let p = spaced_points(
                        &mut rng,
                        1,
                        Point::new(nav.min_x, nav.min_y),
                        Point::new(nav.max_x, nav.max_y),
                        0.11,
                        &others,
                    )[0];
                    sim.release(&ids[robot], Pose2::new(p.x, p.y, rng.random_range(-3.1..3.1)))
                        .unwrap();
                    held[robot] = false;
                }
                _ => {}
            }
            next += 1;
        }
        sim.tick();
        // independent oracle: positions only
        let robots = sim.robots();
        for (i, a) in robots.iter().enumerate() {
            if held[i] {
                continue;
            }
            if !safe.contains(a.pose.point()) {
                out.boundary_violations += 1;
            }
            for (j, b) in robots.iter().enumerate().skip(i + 1) {
                if held[j] {
                    continue;
                }
                let d = a.pose.point().distance(b.pose.point());
                out.min_distance = out.min_distance.min(d);
                if d < min_gap {
                    out.collisions += 1;
                }
            }
        }
        if out.converged_at.is_none() && next == schedule.len() && sim.all_at_targets() {
            out.converged_at = Some(sim.time());
        }
    }
    for (i, r) in sim.robots().iter().enumerate() {
        let t = targets[i];
        let goal = Point::new(t.x + offset.0, t.y + offset.1);
        let pos_err = r.pose.point().distance(goal);
        let yaw_err = wrap_angle(r.pose.yaw - yaws[i]).abs();
        if pos_err > 0.005 || yaw_err > 3f64.to_radians() {
            out.unconverged.push(format!("{} err {:.4} m {:.2} deg mode {}", r.id, pos_err, yaw_err.to_degrees(), r.mode.name()));
        }
    }
    out
}
