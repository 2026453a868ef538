//! Per-proxy gesture recognition.
//!
//! Each proxy has its own [`ProxyTrack`]; [`ingest_pose`] is a pure step of
//! that state machine. Transitions are only committed together with the
//! event that announces them, so a debounced transition is retried on the
//! next sample instead of being lost. This keeps PickedUp/PlacedDown and
//! Entered/LeftProximity strictly alternating.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::event::{EventKind, InteractionEvent};
use super::shadow::{screen_point, target_of, ChartLayout, Target};
use super::{GestureConfig, GestureError};
use crate::ids::ProxyId;
use crate::world::{wrap_angle, ChartId, TablePose, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellCandidate {
    pub chart: ChartId,
    pub since: u64,
    pub fired: bool,
}

/// Recognizer state for one proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyTrack {
    pub proxy: ProxyId,
    pub last_pose: Option<TablePose>,
    pub held: bool,
    /// `(t_ms, unwrapped yaw)` samples inside the rotation window.
    pub yaw_history: VecDeque<(u64, f64)>,
    unwrapped_yaw: f64,
    pub dwell_candidate: Option<DwellCandidate>,
    pub near_backdrop: bool,
    pitched: bool,
    last_emitted: BTreeMap<u8, u64>,
}

impl ProxyTrack {
    pub fn new(proxy: impl Into<ProxyId>) -> Self {
        Self {
            proxy: proxy.into(),
            last_pose: None,
            held: false,
            yaw_history: VecDeque::new(),
            unwrapped_yaw: 0.0,
            dwell_candidate: None,
            near_backdrop: false,
            pitched: false,
            last_emitted: BTreeMap::new(),
        }
    }
}

/// Context a recognizer step needs besides its own state.
#[derive(Debug, Clone, Copy)]
pub struct GestureContext<'a> {
    pub cfg: &'a GestureConfig,
    pub ws: &'a Workspace,
    pub layout: &'a ChartLayout,
}

struct Emitter<'a> {
    track: &'a mut ProxyTrack,
    t: u64,
    debounce: u64,
    out: Vec<InteractionEvent>,
}

impl Emitter<'_> {
    fn ready(&self, kind: EventKind) -> bool {
        self.track
            .last_emitted
            .get(&kind.slot())
            .is_none_or(|&last| self.t.saturating_sub(last) >= self.debounce)
    }

    /// Emits `kind` unless debounced; returns whether it was emitted.
    fn try_emit(&mut self, kind: EventKind) -> bool {
        if !self.ready(kind) {
            return false;
        }
        self.track.last_emitted.insert(kind.slot(), self.t);
        self.out
            .push(InteractionEvent::new(self.t, self.track.proxy.clone(), kind));
        true
    }
}

/// Advances `track` by one pose sample, returning the recognized events.
pub fn ingest_pose(
    track: &mut ProxyTrack,
    ctx: &GestureContext<'_>,
    pose: TablePose,
) -> Result<Vec<InteractionEvent>, GestureError> {
    if !pose.is_valid() {
        return Err(GestureError::InvalidPose {
            proxy: track.proxy.clone(),
            t_ms: pose.t_ms,
        });
    }
    if let Some(last) = &track.last_pose {
        if pose.t_ms <= last.t_ms {
            return Err(GestureError::StaleSample {
                proxy: track.proxy.clone(),
                t_ms: pose.t_ms,
                last_ms: last.t_ms,
            });
        }
        track.unwrapped_yaw += wrap_angle(pose.yaw - last.yaw);
    } else {
        track.unwrapped_yaw = pose.yaw;
    }
    track.last_pose = Some(pose);

    let cfg = ctx.cfg;
    let t = pose.t_ms;
    let mut em = Emitter {
        track,
        t,
        debounce: cfg.debounce_ms,
        out: Vec::new(),
    };

    // pickup hysteresis
    if !em.track.held {
        if pose.z > cfg.pickup_z && em.try_emit(EventKind::PickedUp) {
            let tr = &mut *em.track;
            tr.held = true;
            tr.yaw_history.clear();
            tr.yaw_history.push_back((t, tr.unwrapped_yaw));
            tr.dwell_candidate = None;
            tr.pitched = pose.pitch.abs() > cfg.pitch_rad();
        } else {
            return Ok(em.out);
        }
    } else if pose.z < cfg.place_z && em.ready(EventKind::PlacedDown) {
        if em.track.near_backdrop && em.try_emit(EventKind::LeftProximity) {
            em.track.near_backdrop = false;
        }
        if !em.track.near_backdrop && em.try_emit(EventKind::PlacedDown) {
            let tr = &mut *em.track;
            tr.held = false;
            tr.yaw_history.clear();
            tr.dwell_candidate = None;
            tr.pitched = false;
            return Ok(em.out);
        }
    }

    // proximity to the backdrop
    let near = ctx.ws.distance_to_backdrop(pose.point()) <= cfg.backdrop_near_m;
    if near != em.track.near_backdrop {
        let kind = if near {
            EventKind::EnteredProximity
        } else {
            EventKind::LeftProximity
        };
        if em.try_emit(kind) {
            em.track.near_backdrop = near;
        }
    }

    let target = target_of(screen_point(&pose, ctx.ws, cfg), ctx.layout);

    // dwell selection, only counted while near the display
    match (em.track.near_backdrop, target) {
        (true, Target::Chart(chart)) => match em.track.dwell_candidate {
            Some(ref d) if d.chart == chart => {
                if !d.fired
                    && t - d.since >= cfg.dwell_ms
                    && em.try_emit(EventKind::DwellSelect(chart))
                {
                    if let Some(d) = em.track.dwell_candidate.as_mut() {
                        d.fired = true;
                    }
                }
            }
            _ => {
                em.track.dwell_candidate = Some(DwellCandidate {
                    chart,
                    since: t,
                    fired: false,
                });
            }
        },
        _ => em.track.dwell_candidate = None,
    }

    // cumulative yaw inside the rotation window
    let tr = &mut *em.track;
    tr.yaw_history.push_back((t, tr.unwrapped_yaw));
    let horizon = t.saturating_sub(cfg.rotate_window_ms);
    while tr.yaw_history.front().is_some_and(|&(ts, _)| ts < horizon) {
        tr.yaw_history.pop_front();
    }
    let base = tr.yaw_history.front().map_or(tr.unwrapped_yaw, |&(_, y)| y);
    let turned = tr.unwrapped_yaw - base;
    let rotation = if turned <= -cfg.rotate_rad() {
        Some(EventKind::RotatedCw)
    } else if turned >= cfg.rotate_rad() {
        Some(EventKind::RotatedCcw)
    } else {
        None
    };
    if let Some(kind) = rotation {
        if em.try_emit(kind) {
            let tr = &mut *em.track;
            tr.yaw_history.clear();
            tr.yaw_history.push_back((t, tr.unwrapped_yaw));
        }
    }

    // pitch: rising edge past the threshold
    let over = pose.pitch.abs() > cfg.pitch_rad();
    if !over {
        em.track.pitched = false;
    } else if !em.track.pitched {
        let kind = match target {
            Target::Chart(c) => Some(EventKind::PitchAtChart(c)),
            Target::Shoebox => Some(EventKind::PitchAtShoebox),
            Target::None => None,
        };
        match kind {
            Some(k) => {
                if em.try_emit(k) {
                    em.track.pitched = true;
                }
            }
            None => em.track.pitched = true,
        }
    }

    Ok(em.out)
}

/// Recognizers for every proxy in a session.
#[derive(Debug, Clone)]
pub struct GestureEngine {
    cfg: GestureConfig,
    ws: Workspace,
    layout: ChartLayout,
    tracks: BTreeMap<ProxyId, ProxyTrack>,
}

impl GestureEngine {
    pub fn new(cfg: GestureConfig, ws: Workspace, layout: ChartLayout) -> Result<Self, GestureError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            ws,
            layout,
            tracks: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &GestureConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ChartLayout {
        &self.layout
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn ingest(&mut self, proxy: &ProxyId, pose: TablePose) -> Result<Vec<InteractionEvent>, GestureError> {
        let ctx = GestureContext {
            cfg: &self.cfg,
            ws: &self.ws,
            layout: &self.layout,
        };
        let track = self
            .tracks
            .entry(proxy.clone())
            .or_insert_with(|| ProxyTrack::new(proxy.clone()));
        ingest_pose(track, &ctx, pose)
    }

    pub fn track(&self, proxy: &ProxyId) -> Option<&ProxyTrack> {
        self.tracks.get(proxy)
    }

    pub fn is_held(&self, proxy: &ProxyId) -> bool {
        self.tracks.get(proxy).is_some_and(|t| t.held)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Attribute, Granularity};

    fn engine() -> GestureEngine {
        GestureEngine::new(GestureConfig::default(), Workspace::default(), ChartLayout::default()).unwrap()
    }

    fn pose(t: u64, x: f64, y: f64, z: f64) -> TablePose {
        TablePose {
            t_ms: t,
            x,
            y,
            z,
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    fn kinds(events: &[InteractionEvent]) -> Vec<EventKind> {
        events.iter().map(|e| e.kind).collect()
    }

    fn run(engine: &mut GestureEngine, poses: impl IntoIterator<Item = TablePose>) -> Vec<InteractionEvent> {
        let p = ProxyId::from("P1");
        poses
            .into_iter()
            .flat_map(|pose| engine.ingest(&p, pose).unwrap())
            .collect()
    }

    /// Height needed to put the shadow on a given dashboard row.
    fn z_for_row(row: usize) -> f64 {
        let layout = ChartLayout::default();
        let v = layout.grid.min_y + layout.grid.height() / 3.0 * (row as f64 + 0.5);
        (1.0 - v) * GestureConfig::default().shadow_z_span
    }

    #[test]
    fn z_ramp_gives_one_pickup() {
        let mut e = engine();
        let events = run(&mut e, (0..=50).map(|i| pose(i * 20, 0.5, 0.1, i as f64 * 0.001)));
        assert_eq!(kinds(&events), [EventKind::PickedUp]);
    }

    #[test]
    fn oscillation_inside_band_is_silent() {
        let mut e = engine();
        let events = run(
            &mut e,
            (0..200).map(|i| pose(i * 10, 0.5, 0.1, if i % 2 == 0 { 0.020 } else { 0.028 })),
        );
        assert!(events.is_empty());
    }

    #[test]
    fn pickup_then_place() {
        let mut e = engine();
        let events = run(
            &mut e,
            [pose(0, 0.5, 0.1, 0.0), pose(20, 0.5, 0.1, 0.05), pose(400, 0.5, 0.1, 0.01)],
        );
        assert_eq!(kinds(&events), [EventKind::PickedUp, EventKind::PlacedDown]);
    }

    #[test]
    fn repickup_is_debounced_not_lost() {
        let mut e = engine();
        let events = run(
            &mut e,
            [
                pose(0, 0.5, 0.1, 0.05),
                pose(50, 0.5, 0.1, 0.0),
                pose(100, 0.5, 0.1, 0.05),
                pose(160, 0.5, 0.1, 0.05),
            ],
        );
        assert_eq!(
            kinds(&events),
            [EventKind::PickedUp, EventKind::PlacedDown, EventKind::PickedUp]
        );
        assert_eq!(events[2].t_ms, 160);
    }

    #[test]
    fn stale_sample_rejected() {
        let mut e = engine();
        let p = ProxyId::from("P1");
        e.ingest(&p, pose(10, 0.5, 0.1, 0.0)).unwrap();
        assert!(matches!(
            e.ingest(&p, pose(10, 0.5, 0.1, 0.0)),
            Err(GestureError::StaleSample { .. })
        ));
        assert!(matches!(
            e.ingest(&p, pose(20, f64::NAN, 0.1, 0.0)),
            Err(GestureError::InvalidPose { .. })
        ));
    }

    /// Hand-simulated trace: lift at t=0, move next to the display with the
    /// shadow over electricity/yearly from t=100, sampled every 20 ms. The
    /// recognizer must fire exactly one dwell at t=900 (100 + 800).
    #[test]
    fn dwell_fires_once_after_dwell_time() {
        let mut e = engine();
        let chart = ChartId::new(Attribute::Electricity, Granularity::Yearly);
        let u = ChartLayout::default().cell_center(chart).u;
        let x = u * Workspace::default().width;
        let z = z_for_row(0);
        let mut poses = vec![pose(0, x, 0.1, 0.05)];
        poses.extend((0..=50).map(|i| pose(100 + i * 20, x, 0.55, z)));
        let events = run(&mut e, poses);
        assert_eq!(
            kinds(&events),
            [EventKind::PickedUp, EventKind::EnteredProximity, EventKind::DwellSelect(chart)]
        );
        let dwell = &events[2];
        assert!((880..=920).contains(&dwell.t_ms), "dwell at {}", dwell.t_ms);
        assert_eq!(dwell.t_ms, 900);
    }

    #[test]
    fn dwell_needs_proximity() {
        let mut e = engine();
        let z = z_for_row(1);
        let events = run(&mut e, (0..100).map(|i| pose(i * 20, 0.5, 0.1, z)));
        assert_eq!(kinds(&events), [EventKind::PickedUp]);
    }

    #[test]
    fn moving_to_another_chart_restarts_dwell() {
        let mut e = engine();
        let layout = ChartLayout::default();
        let a = ChartId::new(Attribute::Water, Granularity::Monthly);
        let b = ChartId::new(Attribute::Water, Granularity::Weekly);
        let xa = layout.cell_center(a).u * 1.1;
        let xb = layout.cell_center(b).u * 1.1;
        let z = z_for_row(2);
        let mut poses: Vec<_> = (0..30).map(|i| pose(i * 20, xa, 0.5, z)).collect();
        poses.extend((30..100).map(|i| pose(i * 20, xb, 0.5, z)));
        let events = run(&mut e, poses);
        assert_eq!(
            kinds(&events),
            [EventKind::PickedUp, EventKind::EnteredProximity, EventKind::DwellSelect(b)]
        );
        assert_eq!(events[2].t_ms, 600 + 800);
    }

    #[test]
    fn rotation_sign() {
        let mut e = engine();
        let p = ProxyId::from("P1");
        e.ingest(&p, pose(0, 0.5, 0.1, 0.1)).unwrap();
        let mut events = Vec::new();
        for i in 1..=20 {
            let mut q = pose(i * 50, 0.5, 0.1, 0.1);
            q.yaw = -(i as f64) * 4f64.to_radians();
            events.extend(e.ingest(&p, q).unwrap());
        }
        assert_eq!(kinds(&events), [EventKind::RotatedCw]);

        let mut e = engine();
        e.ingest(&p, pose(0, 0.5, 0.1, 0.1)).unwrap();
        let mut events = Vec::new();
        for i in 1..=20 {
            let mut q = pose(i * 50, 0.5, 0.1, 0.1);
            q.yaw = (i as f64) * 4f64.to_radians();
            events.extend(e.ingest(&p, q).unwrap());
        }
        assert_eq!(kinds(&events), [EventKind::RotatedCcw]);
    }

    #[test]
    fn slow_rotation_outside_window_is_ignored() {
        let mut e = engine();
        let p = ProxyId::from("P1");
        e.ingest(&p, pose(0, 0.5, 0.1, 0.1)).unwrap();
        // 90 degrees over 9 s: never 60 degrees inside 1.5 s
        for i in 1..=90 {
            let mut q = pose(i * 100, 0.5, 0.1, 0.1);
            q.yaw = -(i as f64).to_radians();
            assert!(e.ingest(&p, q).unwrap().is_empty());
        }
    }

    #[test]
    fn rotation_wraps_across_pi() {
        let mut e = engine();
        let p = ProxyId::from("P1");
        let mut q = pose(0, 0.5, 0.1, 0.1);
        q.yaw = 3.0;
        e.ingest(&p, q).unwrap();
        let mut events = Vec::new();
        for i in 1..=10 {
            let mut q = pose(i * 50, 0.5, 0.1, 0.1);
            q.yaw = wrap_angle(3.0 + i as f64 * 8f64.to_radians());
            events.extend(e.ingest(&p, q).unwrap());
        }
        assert_eq!(kinds(&events), [EventKind::RotatedCcw]);
    }

    #[test]
    fn pitch_at_chart_and_shoebox() {
        let mut e = engine();
        let p = ProxyId::from("P1");
        let layout = ChartLayout::default();
        let chart = ChartId::new(Attribute::Emission, Granularity::Distribution);
        let x = layout.cell_center(chart).u * 1.1;
        e.ingest(&p, pose(0, x, 0.2, 0.1)).unwrap();
        let mut q = pose(200, x, 0.2, z_for_row(1));
        q.pitch = 40f64.to_radians();
        assert_eq!(kinds(&e.ingest(&p, q).unwrap()), [EventKind::PitchAtChart(chart)]);
        // holding the pitch does not repeat
        q.t_ms = 400;
        assert!(e.ingest(&p, q).unwrap().is_empty());
        // relax, then pitch again low over the shoebox strip
        let r = pose(600, x, 0.2, 0.04);
        assert!(e.ingest(&p, r).unwrap().is_empty());
        let mut s = pose(800, x, 0.2, 0.04);
        s.pitch = -0.9;
        assert_eq!(kinds(&e.ingest(&p, s).unwrap()), [EventKind::PitchAtShoebox]);
    }

    #[test]
    fn placing_near_display_leaves_proximity_first() {
        let mut e = engine();
        let events = run(
            &mut e,
            [pose(0, 0.5, 0.5, 0.2), pose(300, 0.5, 0.5, 0.0)],
        );
        assert_eq!(
            kinds(&events),
            [
                EventKind::PickedUp,
                EventKind::EnteredProximity,
                EventKind::LeftProximity,
                EventKind::PlacedDown
            ]
        );
    }

    #[test]
    fn on_table_motion_is_silent() {
        let mut e = engine();
        let events = run(
            &mut e,
            (0..100).map(|i| {
                let mut q = pose(i * 10, 0.2 + i as f64 * 0.005, 0.6, 0.0);
                q.yaw = i as f64 * 0.3;
                q.pitch = 1.0;
                q
            }),
        );
        assert!(events.is_empty());
    }
}
