//! The hand-written event log and its end state, worked out on paper.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use active_proxy::dashboard::{DashboardState, Layer};
use active_proxy::world::ChartId;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn chart(s: &str) -> ChartId {
    s.parse().unwrap()
}

/// State after `hand_events.jsonl` with P1..P5 bound to B1..B5.
///
/// Walk-through of the non-obvious steps:
/// - #4 dwell on a distribution chart changes nothing
/// - #6 lock, #9 dwell while locked only moves the highlight
/// - #11 repeated pitch is not a second shoebox entry
/// - #13 unlock while P2 is still near keeps the secondary layer; #14 leaving reverts
/// - #15 P3 entering before being held is ignored
/// - #19 second place-down of P1 is a no-op
/// - #23 place-down while locked keeps the layer, #24 locking again is a no-op
/// - #27 locked dwell moves highlight only; #29 unlock, #30 reselects, #31 leaving reverts
/// - #32 rotating on the primary layer does nothing
/// - #36 reselects; #37, #40 place-downs of non-near proxies keep the layer
pub fn hand_expected() -> DashboardState {
    DashboardState {
        filter: vec!["B5".into()],
        layer: Layer::Secondary(chart("emission_weekly")),
        locked: false,
        shoebox: BTreeMap::from([
            (
                "B2".into(),
                vec![chart("water_yearly"), chart("emission_monthly"), chart("electricity_weekly")],
            ),
            ("B3".into(), vec![chart("electricity_distribution")]),
            ("B4".into(), vec![chart("water_weekly")]),
            ("B5".into(), vec![chart("electricity_monthly")]),
        ]),
        shadows: BTreeMap::new(),
        highlight: Some(chart("emission_weekly")),
        held: BTreeSet::from(["P5".into()]),
        near: BTreeSet::from(["P5".into()]),
    }
}
