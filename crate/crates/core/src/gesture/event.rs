use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::ProxyId;
use crate::world::{ChartId, TablePose};

/// A discrete interaction recognized from a proxy's pose stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    PickedUp,
    PlacedDown,
    EnteredProximity,
    LeftProximity,
    DwellSelect(ChartId),
    /// Clockwise in the table's top-down frame, i.e. decreasing yaw.
    RotatedCw,
    RotatedCcw,
    PitchAtChart(ChartId),
    PitchAtShoebox,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PickedUp => "picked_up",
            EventKind::PlacedDown => "placed_down",
            EventKind::EnteredProximity => "entered_proximity",
            EventKind::LeftProximity => "left_proximity",
            EventKind::DwellSelect(_) => "dwell_select",
            EventKind::RotatedCw => "rotated_cw",
            EventKind::RotatedCcw => "rotated_ccw",
            EventKind::PitchAtChart(_) => "pitch_at_chart",
            EventKind::PitchAtShoebox => "pitch_at_shoebox",
        }
    }

    pub fn chart(&self) -> Option<ChartId> {
        match *self {
            EventKind::DwellSelect(c) | EventKind::PitchAtChart(c) => Some(c),
            _ => None,
        }
    }

    /// Debounce slot; events with a chart payload share one slot per variant.
    pub(crate) fn slot(&self) -> u8 {
        match self {
            EventKind::PickedUp => 0,
            EventKind::PlacedDown => 1,
            EventKind::EnteredProximity => 2,
            EventKind::LeftProximity => 3,
            EventKind::DwellSelect(_) => 4,
            EventKind::RotatedCw => 5,
            EventKind::RotatedCcw => 6,
            EventKind::PitchAtChart(_) => 7,
            EventKind::PitchAtShoebox => 8,
        }
    }

    fn from_parts(name: &str, chart: Option<ChartId>) -> Result<Self, String> {
        let need_chart = || chart.ok_or_else(|| format!("event `{name}` needs a chart payload"));
        Ok(match name {
            "picked_up" => EventKind::PickedUp,
            "placed_down" => EventKind::PlacedDown,
            "entered_proximity" => EventKind::EnteredProximity,
            "left_proximity" => EventKind::LeftProximity,
            "dwell_select" => EventKind::DwellSelect(need_chart()?),
            "rotated_cw" => EventKind::RotatedCw,
            "rotated_ccw" => EventKind::RotatedCcw,
            "pitch_at_chart" => EventKind::PitchAtChart(need_chart()?),
            "pitch_at_shoebox" => EventKind::PitchAtShoebox,
            other => return Err(format!("unknown event `{other}`")),
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.chart() {
            Some(c) => write!(f, "{}({c})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Serialized as one event-log line: `{t_ms, proxy, event, payload}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "EventRecord", try_from = "EventRecord")]
pub struct InteractionEvent {
    pub t_ms: u64,
    pub proxy: ProxyId,
    pub kind: EventKind,
}

impl InteractionEvent {
    pub fn new(t_ms: u64, proxy: impl Into<ProxyId>, kind: EventKind) -> Self {
        Self {
            t_ms,
            proxy: proxy.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Payload {
    chart: ChartId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventRecord {
    t_ms: u64,
    proxy: ProxyId,
    event: String,
    payload: Option<Payload>,
}

impl From<InteractionEvent> for EventRecord {
    fn from(e: InteractionEvent) -> Self {
        EventRecord {
            t_ms: e.t_ms,
            proxy: e.proxy,
            event: e.kind.name().to_owned(),
            payload: e.kind.chart().map(|chart| Payload { chart }),
        }
    }
}

impl TryFrom<EventRecord> for InteractionEvent {
    type Error = String;

    fn try_from(r: EventRecord) -> Result<Self, Self::Error> {
        Ok(InteractionEvent {
            t_ms: r.t_ms,
            kind: EventKind::from_parts(&r.event, r.payload.map(|p| p.chart))?,
            proxy: r.proxy,
        })
    }
}

/// One line of a pose trace: `{proxy, t_ms, x, y, z, yaw, pitch, roll}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub proxy: ProxyId,
    #[serde(flatten)]
    pub pose: TablePose,
}

/// Orders events from several proxies by timestamp, then proxy id.
pub fn merge_events(events: &mut [InteractionEvent]) {
    events.sort_by(|a, b| a.t_ms.cmp(&b.t_ms).then_with(|| a.proxy.cmp(&b.proxy)));
}
