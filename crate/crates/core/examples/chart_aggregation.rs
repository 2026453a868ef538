//! Aggregate two years of synthetic readings into dashboard charts and
//! drill the yearly chart down to its per-year sub-charts.

use std::collections::BTreeSet;

use active_proxy::fixtures::{study_range, synthetic_readings};
use active_proxy::world::{aggregate, drill_down, Attribute, ChartId, Granularity};
use active_proxy::Scenario;

fn main() -> anyhow::Result<()> {
    let s = Scenario::demo();
    let readings = synthetic_readings(&s.buildings, study_range(), 42);
    println!("{} readings", readings.len());

    let filter: BTreeSet<_> = ["B1".into(), "B4".into()].into();
    let monthly = aggregate(&readings, ChartId::new(Attribute::Electricity, Granularity::Monthly), &filter);
    for series in &monthly.series {
        let line: Vec<String> = series.buckets.iter().map(|b| format!("{} {:.0}", b.label, b.mean)).collect();
        println!("{}: {}", series.building, line.join(", "));
    }

    let hist = aggregate(&readings, ChartId::new(Attribute::Water, Granularity::Distribution), &filter);
    for bin in hist.histogram.unwrap_or_default() {
        println!("[{:>7.1}, {:>7.1}) {}", bin.lower, bin.upper, "#".repeat(bin.count / 20));
    }

    for sub in drill_down(ChartId::new(Attribute::Emission, Granularity::Yearly), &readings, &filter)? {
        let period = sub.period.map(|p| p.label()).unwrap_or_default();
        println!("{period}: {} monthly buckets per building", sub.series[0].buckets.len());
    }
    Ok(())
}
