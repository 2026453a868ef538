//! Scripted study tasks and synthetic data.
//!
//! | task | shape                                                              |
//! |------|--------------------------------------------------------------------|
//! | BM   | select building → filter by building → pitch three charts          |
//! | DR   | select chart → secondary layer (locked) → filter by another building |
//! | RD   | filter by building → dwell on a chart → secondary layer            |
//! | DR-S | as DR, then pan the map                                            |
//!
//! Scripts start once the carriers have settled and lift each proxy from
//! its target pose. Samples are 20 ms apart.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dashboard::{canonical_json, replay, state_hash, DashboardState};
use crate::gesture::{GestureEngine, GestureError, InteractionEvent, PoseSample};
use crate::ids::ProxyId;
use crate::runner::{write_script, ScriptLine};
use crate::scenario::Scenario;
use crate::world::{
    write_readings, Attribute, Building, ChartId, DateRange, Edge, Granularity, Point, Reading, ReadingSet, TablePose,
    Workspace,
};

const SAMPLE_MS: u64 = 20;
/// When the first hand enters; the carriers are home by then.
pub const TASK_START_MS: u64 = 15_000;
/// Hand height while carrying a proxy between places.
const CARRY_Z: f64 = 0.06;
/// Distance from the backdrop while over a chart (inside the proximity band)
/// and while lining up for one (outside it).
const NEAR_D: f64 = 0.15;
const FAR_D: f64 = 0.5;
const PITCH: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Bm,
    Dr,
    Rd,
    DrS,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Bm, Task::Dr, Task::Rd, Task::DrS];

    pub fn stem(self) -> &'static str {
        match self {
            Task::Bm => "bm",
            Task::Dr => "dr",
            Task::Rd => "rd",
            Task::DrS => "drs",
        }
    }

    pub fn script_name(self) -> String {
        format!("{}_task.jsonl", self.stem())
    }

    pub fn events_name(self) -> String {
        format!("{}_events.jsonl", self.stem())
    }

    pub fn golden_name(self) -> String {
        format!("{}.golden.json", self.stem())
    }
}

/// Records a hand moving one proxy as a stream of tracker samples.
struct Hand<'a> {
    proxy: ProxyId,
    pose: TablePose,
    out: &'a mut Vec<ScriptLine>,
}

impl<'a> Hand<'a> {
    fn pick(out: &'a mut Vec<ScriptLine>, proxy: &ProxyId, at: TablePose) -> Self {
        let mut hand = Hand {
            proxy: proxy.clone(),
            pose: at,
            out,
        };
        hand.emit();
        hand
    }

    fn emit(&mut self) {
        self.out.push(ScriptLine::Pose(PoseSample {
            proxy: self.proxy.clone(),
            pose: self.pose,
        }));
    }

    /// Moves linearly to the pose produced by `f` over `ms` milliseconds.
    fn to(&mut self, ms: u64, f: impl FnOnce(&mut TablePose)) -> &mut Self {
        let from = self.pose;
        let mut goal = from;
        f(&mut goal);
        let steps = (ms / SAMPLE_MS).max(1);
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let lerp = |a: f64, b: f64| a + (b - a) * s;
            self.pose = TablePose {
                t_ms: from.t_ms + k * SAMPLE_MS,
                x: lerp(from.x, goal.x),
                y: lerp(from.y, goal.y),
                z: lerp(from.z, goal.z),
                yaw: lerp(from.yaw, goal.yaw),
                pitch: lerp(from.pitch, goal.pitch),
                roll: lerp(from.roll, goal.roll),
            };
            self.emit();
        }
        self
    }

    fn wait(&mut self, ms: u64) -> &mut Self {
        self.to(ms, |_| {})
    }

    fn t(&self) -> u64 {
        self.pose.t_ms
    }
}

/// Table point at normalized position `u` along the backdrop, `d` meters from it.
fn along(ws: &Workspace, u: f64, d: f64) -> Point {
    match ws.backdrop_edge {
        Edge::North => Point::new(u * ws.width, ws.height - d),
        Edge::South => Point::new((1.0 - u) * ws.width, d),
        Edge::East => Point::new(ws.width - d, (1.0 - u) * ws.height),
        Edge::West => Point::new(d, u * ws.height),
    }
}

struct Stage<'s> {
    scenario: &'s Scenario,
    home: BTreeMap<ProxyId, TablePose>,
}

impl<'s> Stage<'s> {
    fn new(scenario: &'s Scenario) -> Self {
        let home = scenario
            .targets(&scenario.viewport)
            .into_iter()
            .map(|(id, t)| (id, TablePose::on_table(t.pose.x, t.pose.y, t.pose.yaw, 0)))
            .collect();
        Self { scenario, home }
    }

    fn proxy(&self, i: usize) -> &ProxyId {
        &self.scenario.proxies[i % self.scenario.proxies.len()].proxy
    }

    fn home(&self, proxy: &ProxyId, t_ms: u64) -> TablePose {
        TablePose {
            t_ms,
            ..self.home[proxy]
        }
    }

    /// Hand position and height that put the shadow over `chart`.
    fn over(&self, chart: ChartId, d: f64) -> (Point, f64) {
        let sp = self.scenario.layout.cell_center(chart);
        let p = along(&self.scenario.workspace, sp.u, d);
        (p, (1.0 - sp.v) * self.scenario.gesture.shadow_z_span)
    }

    /// Lines up outside the proximity band, leans in over `chart` for `stay`
    /// ms, and backs out again.
    fn visit(&self, hand: &mut Hand, chart: ChartId, stay: u64, inside: impl FnOnce(&mut Hand)) {
        let (far, z) = self.over(chart, FAR_D);
        let (near, _) = self.over(chart, NEAR_D);
        hand.to(700, |p| {
            p.x = far.x;
            p.y = far.y;
            p.z = z;
        });
        hand.to(300, |p| {
            p.x = near.x;
            p.y = near.y;
        });
        hand.wait(stay);
        inside(hand);
    }

    fn pitch(hand: &mut Hand) {
        hand.to(100, |p| p.pitch = PITCH).wait(40).to(100, |p| p.pitch = 0.0);
    }

    fn lift(&self, hand: &mut Hand) {
        hand.wait(100).to(300, |p| p.z = CARRY_Z);
    }

    fn put_back(&self, hand: &mut Hand) {
        let home = self.home[&hand.proxy];
        hand.to(900, |p| {
            p.x = home.x;
            p.y = home.y;
            p.z = CARRY_Z;
            p.pitch = 0.0;
        })
        .to(300, |p| {
            p.z = 0.0;
            p.yaw = home.yaw;
        })
        .wait(200);
    }
}

fn chart(a: Attribute, g: Granularity) -> ChartId {
    ChartId::new(a, g)
}

/// The tracker script realizing `task` in `scenario`.
pub fn task_script(task: Task, scenario: &Scenario) -> Vec<ScriptLine> {
    let stage = Stage::new(scenario);
    let mut out = Vec::new();
    match task {
        Task::Bm => {
            let p = stage.proxy(0).clone();
            let mut hand = Hand::pick(&mut out, &p, stage.home(&p, TASK_START_MS));
            stage.lift(&mut hand);
            for c in [
                chart(Attribute::Electricity, Granularity::Monthly),
                chart(Attribute::Water, Granularity::Yearly),
                chart(Attribute::Emission, Granularity::Weekly),
            ] {
                stage.visit(&mut hand, c, 60, |h| {
                    Stage::pitch(h);
                    let back = stage.over(c, FAR_D).0;
                    h.to(300, |p| {
                        p.x = back.x;
                        p.y = back.y;
                    });
                });
            }
            stage.put_back(&mut hand);
        }
        Task::Rd => {
            let p = stage.proxy(2).clone();
            let mut hand = Hand::pick(&mut out, &p, stage.home(&p, TASK_START_MS));
            stage.lift(&mut hand);
            stage.visit(&mut hand, chart(Attribute::Electricity, Granularity::Yearly), 1500, |_| {});
        }
        Task::Dr | Task::DrS => {
            let selector = stage.proxy(3).clone();
            let c = match task {
                Task::Dr => chart(Attribute::Water, Granularity::Monthly),
                _ => chart(Attribute::Emission, Granularity::Yearly),
            };
            let mut hand = Hand::pick(&mut out, &selector, stage.home(&selector, TASK_START_MS));
            stage.lift(&mut hand);
            stage.visit(&mut hand, c, 1200, |h| {
                // clockwise quarter turn locks the drill-down
                h.to(600, |p| p.yaw -= 70f64.to_radians()).wait(200);
            });
            stage.put_back(&mut hand);
            let t = hand.t() + 500;
            drop(hand);

            let answer = stage.proxy(1).clone();
            let mut pan = None;
            let mut hand = Hand::pick(&mut out, &answer, stage.home(&answer, t));
            stage.lift(&mut hand);
            hand.wait(1000);
            if task == Task::DrS {
                let mut v = scenario.viewport;
                // pan 60 m east to bring the referent's surroundings into view
                let m_lon = crate::world::geometry::EARTH_RADIUS_M * PI / 180.0 * v.center.lat.to_radians().cos();
                v.center.lon += 60.0 / m_lon;
                pan = Some(ScriptLine::Viewport {
                    t_ms: hand.t() + 10,
                    viewport: v,
                });
                hand.wait(1000);
            }
            drop(hand);
            out.extend(pan);
        }
    }
    out
}

/// Interaction events the gesture engine recognizes in a script.
pub fn script_events(scenario: &Scenario, script: &[ScriptLine]) -> Result<Vec<InteractionEvent>, GestureError> {
    let mut engine = GestureEngine::new(scenario.gesture, scenario.workspace, scenario.layout)?;
    let mut lines: Vec<&ScriptLine> = script.iter().collect();
    lines.sort_by_key(|l| l.t_ms());
    let mut events = Vec::new();
    for line in lines {
        if let ScriptLine::Pose(s) = line {
            events.extend(engine.ingest(&s.proxy, s.pose)?);
        }
    }
    Ok(events)
}

pub fn write_events<W: std::io::Write>(mut sink: W, events: &[InteractionEvent]) -> std::io::Result<()> {
    for e in events {
        writeln!(sink, "{}", serde_json::to_string(e)?)?;
    }
    sink.flush()
}

/// Reads a JSONL event log; blank lines and `#` comments are skipped.
pub fn read_events<R: std::io::BufRead>(source: R) -> Result<Vec<InteractionEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

/// Expected end state of a task, stored as a golden file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub name: String,
    pub events: usize,
    pub viewport_changes: usize,
    pub state_hash: String,
    pub state: DashboardState,
}

impl Golden {
    pub fn new(name: &str, events: &[InteractionEvent], viewport_changes: usize, state: DashboardState) -> Self {
        Self {
            name: name.to_owned(),
            events: events.len(),
            viewport_changes,
            state_hash: state_hash(&state),
            state,
        }
    }

    /// Bit-exact comparison on the canonical state encoding.
    pub fn matches(&self, other: &Golden) -> bool {
        self.name == other.name
            && self.events == other.events
            && self.viewport_changes == other.viewport_changes
            && self.state_hash == other.state_hash
            && canonical_json(&self.state) == canonical_json(&other.state)
    }
}

pub fn task_golden(task: Task, scenario: &Scenario, script: &[ScriptLine]) -> Result<Golden, String> {
    let events = script_events(scenario, script).map_err(|e| e.to_string())?;
    let state = replay(&events, &scenario.binding()).map_err(|e| e.to_string())?;
    let viewports = script.iter().filter(|l| matches!(l, ScriptLine::Viewport { .. })).count();
    Ok(Golden::new(task.stem(), &events, viewports, state))
}

/// The two study years, inclusive.
pub fn study_range() -> DateRange {
    DateRange {
        start: Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap(),
        end: Utc.with_ymd_and_hms(2017, 12, 31, 23, 59, 59).unwrap(),
    }
}

/// Daily readings per building and attribute with a yearly cycle and
/// multiplicative noise.
pub fn synthetic_readings(buildings: &[Building], range: DateRange, seed: u64) -> ReadingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(1.0, 0.08).expect("valid normal");
    let days = (range.end - range.start).num_days();
    let mut readings = Vec::new();
    for (bi, b) in buildings.iter().enumerate() {
        for (ai, attribute) in [Attribute::Electricity, Attribute::Emission, Attribute::Water].into_iter().enumerate() {
            let base = 100.0 * (1.0 + bi as f64 * 0.35) * [4.0, 1.5, 9.0][ai];
            for day in 0..=days {
                let timestamp = range.start + Duration::days(day);
                let season = 1.0 + 0.3 * (2.0 * PI * day as f64 / 365.25).cos();
                let value: f64 = (base * season * noise.sample(&mut rng)).max(0.0);
                readings.push(Reading {
                    building: b.id.clone(),
                    attribute,
                    timestamp,
                    value: (value * 1000.0).round() / 1000.0,
                });
            }
        }
    }
    ReadingSet::from_readings(readings).expect("generated readings are unique and valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Item {
    Task(Task),
    Readings,
    Scenario,
}

impl std::str::FromStr for Item {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bm" => Item::Task(Task::Bm),
            "dr" => Item::Task(Task::Dr),
            "rd" => Item::Task(Task::Rd),
            "drs" | "dr-s" => Item::Task(Task::DrS),
            "readings" => Item::Readings,
            "scenario" => Item::Scenario,
            other => return Err(format!("unknown fixture `{other}` (bm, dr, rd, drs, readings, scenario, all)")),
        })
    }
}

impl Item {
    pub fn all() -> Vec<Item> {
        let mut v: Vec<Item> = Task::ALL.into_iter().map(Item::Task).collect();
        v.extend([Item::Readings, Item::Scenario]);
        v
    }
}

/// Writes the requested fixtures under `dir` and returns the files written.
/// Tasks produce a pose script, its event log and a golden state.
pub fn generate(dir: &Path, items: &[Item], scenario: &Scenario, seed: u64) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if items.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir)?;
    for item in items {
        match *item {
            Item::Task(task) => {
                let script = task_script(task, scenario);
                let path = dir.join(task.script_name());
                write_script(fs::File::create(&path)?, &script)?;
                written.push(path);

                let events = script_events(scenario, &script).map_err(std::io::Error::other)?;
                let path = dir.join(task.events_name());
                write_events(fs::File::create(&path)?, &events)?;
                written.push(path);

                let golden = task_golden(task, scenario, &script).map_err(std::io::Error::other)?;
                fs::create_dir_all(dir.join("golden"))?;
                let path = dir.join("golden").join(task.golden_name());
                fs::write(&path, serde_json::to_string_pretty(&golden)? + "\n")?;
                written.push(path);
            }
            Item::Readings => {
                let set = synthetic_readings(&scenario.buildings, study_range(), seed);
                let path = dir.join("readings.csv");
                write_readings(fs::File::create(&path)?, &set)?;
                written.push(path);
            }
            Item::Scenario => {
                let mut s = scenario.clone();
                s.dataset = Some("readings.csv".into());
                s.date_range = Some(study_range());
                let path = dir.join("campus.json");
                fs::write(&path, serde_json::to_string_pretty(&s)? + "\n")?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dashboard::Layer;
    use crate::gesture::EventKind;
    use crate::world::load_readings;

    fn kinds(events: &[InteractionEvent]) -> Vec<String> {
        events.iter().map(|e| e.kind.to_string()).collect()
    }

    #[test]
    fn bookmark_task_pitches_three_charts() {
        let s = Scenario::demo();
        let script = task_script(Task::Bm, &s);
        let events = script_events(&s, &script).unwrap();
        let pitches = events.iter().filter(|e| matches!(e.kind, EventKind::PitchAtChart(_))).count();
        assert!(pitches >= 3, "{:?}", kinds(&events));
        assert!(!events.iter().any(|e| matches!(e.kind, EventKind::DwellSelect(_))), "{:?}", kinds(&events));
        let g = task_golden(Task::Bm, &s, &script).unwrap();
        assert_eq!(g.state.shoebox[&"B1".into()].len(), 3);
        assert!(g.state.filter.is_empty());
    }

    #[test]
    fn drill_tasks_end_on_the_secondary_layer_with_one_filter() {
        let s = Scenario::demo();
        for task in [Task::Dr, Task::Rd, Task::DrS] {
            let script = task_script(task, &s);
            let g = task_golden(task, &s, &script).unwrap();
            assert!(matches!(g.state.layer, Layer::Secondary(_)), "{task:?}: {:?}", g.state);
            assert_eq!(g.state.filter.len(), 1, "{task:?}");
            assert_eq!(g.viewport_changes, usize::from(task == Task::DrS));
        }
    }

    #[test]
    fn scripts_are_time_ordered_per_proxy_and_fast_enough() {
        let s = Scenario::demo();
        for task in Task::ALL {
            let script = task_script(task, &s);
            let mut last: BTreeMap<ProxyId, u64> = BTreeMap::new();
            for l in &script {
                if let ScriptLine::Pose(p) = l {
                    if let Some(&prev) = last.get(&p.proxy) {
                        assert!(p.pose.t_ms > prev && p.pose.t_ms - prev <= 50, "{task:?}");
                    }
                    last.insert(p.proxy.clone(), p.pose.t_ms);
                }
            }
        }
    }

    #[test]
    fn readings_reload_losslessly() {
        let s = Scenario::demo();
        let set = synthetic_readings(&s.buildings, study_range(), 3);
        assert_eq!(set.len(), 5 * 3 * 731);
        let mut buf = Vec::new();
        write_readings(&mut buf, &set).unwrap();
        let known = s.buildings.iter().map(|b| b.id.clone()).collect();
        let back = load_readings(&buf[..], &known, Some(&study_range())).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn tasks_survive_tracker_noise_through_the_hub() {
        let s = Scenario::demo();
        for task in Task::ALL {
            let script = task_script(task, &s);
            let golden = task_golden(task, &s, &script).unwrap();
            let opts = crate::runner::RunOptions {
                seed: 11,
                duration_ms: 30_000,
                record: false,
            };
            let out = crate::runner::run(s.clone(), ReadingSet::new(), &script, &opts).unwrap();
            assert!(out.metrics.ok(), "{task:?}: {:?}", out.metrics);
            let state = out.session.state();
            assert_eq!(state.layer, golden.state.layer, "{task:?}");
            assert_eq!(state.filter, golden.state.filter, "{task:?}");
            assert_eq!(state.shoebox, golden.state.shoebox, "{task:?}");
        }
    }

    #[test]
    fn empty_request_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("none");
        assert!(generate(&out, &[], &Scenario::demo(), 1).unwrap().is_empty());
        assert!(!out.exists());
    }
}
