//! The dashboard transition function.
//!
//! | event              | effect on state                                        |
//! |--------------------|--------------------------------------------------------|
//! | PickedUp           | building joins the filter                              |
//! | PlacedDown         | building leaves the filter, shadow dropped             |
//! | EnteredProximity   | proxy marked near the display                          |
//! | LeftProximity      | back to the primary layer unless locked or still near  |
//! | DwellSelect(c)     | secondary layer on `c` (ignored for distributions)     |
//! | RotatedCw          | locks a secondary layer                                |
//! | RotatedCcw         | unlocks; back to primary if nobody is near             |
//! | PitchAtChart(c)    | `c` added to the building's shoebox                    |
//! | PitchAtShoebox     | no state change, shows the building's shoebox          |
//!
//! While locked only highlight changes are accepted: a dwell moves the
//! highlight but keeps the locked layer.

use super::state::{Binding, DashboardState, Effect, Layer};
use super::DashboardError;
use crate::gesture::{EventKind, InteractionEvent};
use crate::world::Granularity;

fn filter_effects(state: &DashboardState) -> Vec<Effect> {
    if state.filter.is_empty() {
        vec![
            Effect::RefreshCharts,
            Effect::LegendHighlight { buildings: Vec::new() },
        ]
    } else {
        vec![
            Effect::DimNonSelected,
            Effect::LegendHighlight {
                buildings: state.filter.clone(),
            },
        ]
    }
}

fn revert_to_primary(state: &mut DashboardState, effects: &mut Vec<Effect>) {
    if let Layer::Secondary(_) = state.layer {
        state.layer = Layer::Primary;
        state.highlight = None;
        effects.push(Effect::RefreshCharts);
    }
}

/// Applies one event. Combinations without a defined transition are no-ops.
pub fn reduce(
    state: &DashboardState,
    event: &InteractionEvent,
    binding: &Binding,
) -> Result<(DashboardState, Vec<Effect>), DashboardError> {
    let building = binding.building(&event.proxy)?.clone();
    let proxy = &event.proxy;
    let mut next = state.clone();
    let mut effects = Vec::new();

    match event.kind {
        EventKind::PickedUp => {
            if next.held.insert(proxy.clone()) {
                if !next.filter.contains(&building) {
                    next.filter.push(building);
                }
                effects = filter_effects(&next);
            }
        }
        EventKind::PlacedDown => {
            if next.held.remove(proxy) {
                next.shadows.remove(proxy);
                let still_held = next.held.iter().any(|p| binding.0.get(p) == Some(&building));
                if !still_held {
                    next.filter.retain(|b| b != &building);
                }
                effects = filter_effects(&next);
                if next.near.remove(proxy) && next.near.is_empty() && !next.locked {
                    revert_to_primary(&mut next, &mut effects);
                }
            }
        }
        EventKind::EnteredProximity => {
            if next.held.contains(proxy) {
                next.near.insert(proxy.clone());
            }
        }
        EventKind::LeftProximity => {
            if next.near.remove(proxy) && next.near.is_empty() && !next.locked {
                revert_to_primary(&mut next, &mut effects);
            }
        }
        EventKind::DwellSelect(chart) => {
            if chart.granularity != Granularity::Distribution {
                if !next.locked {
                    next.layer = Layer::Secondary(chart);
                    effects.push(Effect::RefreshCharts);
                }
                next.highlight = Some(chart);
                effects.push(Effect::HighlightChart {
                    chart,
                    flip_hint: true,
                });
            }
        }
        EventKind::RotatedCw => {
            if matches!(next.layer, Layer::Secondary(_)) && !next.locked {
                next.locked = true;
                effects.push(Effect::LockIcon { locked: true });
            }
        }
        EventKind::RotatedCcw => {
            if next.locked {
                next.locked = false;
                effects.push(Effect::LockIcon { locked: false });
            }
            if next.near.is_empty() {
                revert_to_primary(&mut next, &mut effects);
            }
        }
        EventKind::PitchAtChart(chart) => {
            let charts = next.shoebox.entry(building.clone()).or_default();
            if !charts.contains(&chart) {
                charts.push(chart);
                effects.push(Effect::ShoeboxFly {
                    from: chart,
                    building: building.clone(),
                });
                effects.push(Effect::ShoeboxBadge { chart, building });
            }
        }
        EventKind::PitchAtShoebox => {
            effects.push(Effect::ShowShoeboxFor { building });
        }
    }
    Ok((next, effects))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("event {index}: {source}")]
pub struct ReplayError {
    pub index: usize,
    #[source]
    pub source: DashboardError,
}

/// Left fold of [`reduce`] from `initial`, discarding effects.
pub fn replay_from<'a>(
    initial: DashboardState,
    events: impl IntoIterator<Item = &'a InteractionEvent>,
    binding: &Binding,
) -> Result<DashboardState, ReplayError> {
    events
        .into_iter()
        .enumerate()
        .try_fold(initial, |state, (index, e)| {
            reduce(&state, e, binding)
                .map(|(s, _)| s)
                .map_err(|source| ReplayError { index, source })
        })
}

/// Replays `events` from the empty initial state.
pub fn replay(events: &[InteractionEvent], binding: &Binding) -> Result<DashboardState, ReplayError> {
    replay_from(DashboardState::new(), events, binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::BuildingId;
    use crate::world::{Attribute, ChartId};

    fn binding() -> Binding {
        [("P1", "B1"), ("P2", "B2"), ("P3", "B3")].into_iter().collect()
    }

    fn ev(t: u64, p: &str, kind: EventKind) -> InteractionEvent {
        InteractionEvent::new(t, p, kind)
    }

    fn step(state: &DashboardState, e: InteractionEvent) -> (DashboardState, Vec<Effect>) {
        reduce(state, &e, &binding()).unwrap()
    }

    const EY: ChartId = ChartId::new(Attribute::Electricity, Granularity::Yearly);

    #[test]
    fn pickup_filters_and_dims() {
        let (s, fx) = step(&DashboardState::new(), ev(0, "P2", EventKind::PickedUp));
        assert_eq!(s.filter, vec![BuildingId::from("B2")]);
        assert!(fx.contains(&Effect::DimNonSelected));
        assert!(fx.contains(&Effect::LegendHighlight {
            buildings: vec!["B2".into()]
        }));
    }

    #[test]
    fn pickup_then_place_is_identity() {
        let s0 = DashboardState::new();
        let (s1, _) = step(&s0, ev(0, "P1", EventKind::PickedUp));
        let (s2, fx) = step(&s1, ev(10, "P1", EventKind::PlacedDown));
        assert_eq!(s2, s0);
        assert!(fx.contains(&Effect::RefreshCharts));
    }

    #[test]
    fn filter_keeps_pickup_order() {
        let b = binding();
        let events = [
            ev(0, "P3", EventKind::PickedUp),
            ev(1, "P1", EventKind::PickedUp),
            ev(2, "P2", EventKind::PickedUp),
            ev(3, "P1", EventKind::PlacedDown),
        ];
        let s = replay(&events, &b).unwrap();
        assert_eq!(s.filter, vec![BuildingId::from("B3"), "B2".into()]);
    }

    #[test]
    fn lock_survives_leaving_proximity() {
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(3, "P1", EventKind::RotatedCw),
            ev(4, "P1", EventKind::LeftProximity),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert_eq!(s.layer, Layer::Secondary(EY));
        assert!(s.locked);
    }

    #[test]
    fn unlocked_leave_reverts() {
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(4, "P1", EventKind::LeftProximity),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert_eq!(s.layer, Layer::Primary);
        assert_eq!(s.highlight, None);
    }

    #[test]
    fn any_proxy_unlocks() {
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(3, "P1", EventKind::RotatedCw),
            ev(4, "P1", EventKind::LeftProximity),
            ev(5, "P2", EventKind::PickedUp),
        ];
        let s = replay(&events, &binding()).unwrap();
        let (s, fx) = step(&s, ev(6, "P2", EventKind::RotatedCcw));
        assert!(!s.locked);
        assert_eq!(s.layer, Layer::Primary);
        assert!(fx.contains(&Effect::LockIcon { locked: false }));
        assert!(fx.contains(&Effect::RefreshCharts));
    }

    #[test]
    fn unlock_while_near_keeps_detail() {
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(3, "P1", EventKind::RotatedCw),
            ev(4, "P1", EventKind::RotatedCcw),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert!(!s.locked);
        assert_eq!(s.layer, Layer::Secondary(EY));
    }

    #[test]
    fn lock_needs_secondary_layer() {
        let events = [ev(0, "P1", EventKind::PickedUp), ev(1, "P1", EventKind::RotatedCw)];
        let s = replay(&events, &binding()).unwrap();
        assert!(!s.locked);
    }

    #[test]
    fn distribution_dwell_is_noop() {
        let c = ChartId::new(Attribute::Water, Granularity::Distribution);
        let s = replay(&[ev(0, "P1", EventKind::PickedUp)], &binding()).unwrap();
        let (s2, fx) = step(&s, ev(1, "P1", EventKind::DwellSelect(c)));
        assert_eq!(s2, s);
        assert!(fx.is_empty());
    }

    #[test]
    fn locked_dwell_only_moves_highlight() {
        let other = ChartId::new(Attribute::Water, Granularity::Monthly);
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(3, "P1", EventKind::RotatedCw),
            ev(4, "P1", EventKind::DwellSelect(other)),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert_eq!(s.layer, Layer::Secondary(EY));
        assert_eq!(s.highlight, Some(other));
    }

    #[test]
    fn last_dwell_wins() {
        let other = ChartId::new(Attribute::Emission, Granularity::Weekly);
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(0, "P2", EventKind::PickedUp),
            ev(1, "P1", EventKind::EnteredProximity),
            ev(1, "P2", EventKind::EnteredProximity),
            ev(2, "P1", EventKind::DwellSelect(EY)),
            ev(3, "P2", EventKind::DwellSelect(other)),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert_eq!(s.layer, Layer::Secondary(other));
    }

    #[test]
    fn shoebox_is_idempotent_and_grouped() {
        let c2 = ChartId::new(Attribute::Water, Granularity::Weekly);
        let events = [
            ev(0, "P1", EventKind::PickedUp),
            ev(1, "P1", EventKind::PitchAtChart(EY)),
            ev(2, "P1", EventKind::PitchAtChart(c2)),
        ];
        let s = replay(&events, &binding()).unwrap();
        let (s2, fx) = step(&s, ev(3, "P1", EventKind::PitchAtChart(EY)));
        assert_eq!(s2, s);
        assert!(fx.is_empty());
        assert_eq!(s.shoebox[&BuildingId::from("B1")], vec![EY, c2]);

        let (_, fx) = step(&s, ev(4, "P3", EventKind::PitchAtChart(EY)));
        assert_eq!(
            fx,
            vec![
                Effect::ShoeboxFly { from: EY, building: "B3".into() },
                Effect::ShoeboxBadge { chart: EY, building: "B3".into() },
            ]
        );
    }

    #[test]
    fn pitch_at_shoebox_only_shows() {
        let s = replay(&[ev(0, "P1", EventKind::PickedUp)], &binding()).unwrap();
        let (s2, fx) = step(&s, ev(1, "P1", EventKind::PitchAtShoebox));
        assert_eq!(s2, s);
        assert_eq!(fx, vec![Effect::ShowShoeboxFor { building: "B1".into() }]);
    }

    #[test]
    fn unbound_proxy_is_named() {
        let err = reduce(&DashboardState::new(), &ev(0, "P9", EventKind::PickedUp), &binding()).unwrap_err();
        assert!(err.to_string().contains("P9"));
        let err = replay(&[ev(0, "P1", EventKind::PickedUp), ev(1, "P9", EventKind::PickedUp)], &binding())
            .unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn rd_task_sequence() {
        // Filter by Building -> Select Chart -> Change to Secondary Layer
        let events = [
            ev(0, "P2", EventKind::PickedUp),
            ev(300, "P2", EventKind::EnteredProximity),
            ev(1100, "P2", EventKind::DwellSelect(EY)),
        ];
        let s = replay(&events, &binding()).unwrap();
        assert_eq!(s.layer, Layer::Secondary(EY));
        assert_eq!(s.filter, vec![BuildingId::from("B2")]);
    }

    #[test]
    fn empty_replay_is_initial() {
        assert_eq!(replay(&[], &binding()).unwrap(), DashboardState::new());
    }
}
