//! The render model a dashboard client draws: chart grid, legend, shoebox
//! groups and shadows, for the overview and for a drill-down.

use active_proxy::dashboard::{reduce, snapshot, DashboardState};
use active_proxy::fixtures::{study_range, synthetic_readings};
use active_proxy::gesture::{EventKind, InteractionEvent};
use active_proxy::world::{Attribute, ChartId, Granularity};
use active_proxy::Scenario;

fn main() -> anyhow::Result<()> {
    let s = Scenario::demo();
    let readings = synthetic_readings(&s.buildings, study_range(), 7);
    let binding = s.binding();
    let water_monthly = ChartId::new(Attribute::Water, Granularity::Monthly);

    let mut state = DashboardState::new();
    let overview = snapshot(&state, &readings, &s.buildings);
    println!("overview: {} charts, legend {:?}", overview.charts.len(), overview.legend.iter().map(|l| &l.name).collect::<Vec<_>>());

    for (t, kind) in [
        (0, EventKind::PickedUp),
        (100, EventKind::EnteredProximity),
        (900, EventKind::DwellSelect(water_monthly)),
        (1500, EventKind::PitchAtChart(water_monthly)),
    ] {
        let (next, effects) = reduce(&state, &InteractionEvent::new(t, "P4", kind), &binding)?;
        println!("{kind:?} → {effects:?}");
        state = next;
    }
    let drilled = snapshot(&state, &readings, &s.buildings);
    println!("layer {:?}: {} sub-charts", drilled.layer, drilled.charts.len());
    for c in drilled.charts.iter().take(3) {
        println!("  {} — {} buckets", c.period.map(|p| p.label()).unwrap_or_default(), c.series[0].buckets.len());
    }
    println!("shoebox: {:?}", drilled.shoebox);
    Ok(())
}
