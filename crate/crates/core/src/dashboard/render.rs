use serde::{Deserialize, Serialize};

use super::state::{DashboardState, Layer};
use crate::gesture::ShadowState;
use crate::ids::BuildingId;
use crate::world::{aggregate, drill_down, Building, ChartData, ChartId, ReadingSet, Rgb};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub building: BuildingId,
    pub name: String,
    pub color: Rgb,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShoeboxGroup {
    pub building: BuildingId,
    pub charts: Vec<ChartId>,
}

/// Everything a dashboard client needs to draw one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderModel {
    pub layer: Layer,
    pub locked: bool,
    pub highlight: Option<ChartId>,
    pub filter: Vec<BuildingId>,
    /// The 12 primary charts in grid order, or the drill-down sub-charts.
    pub charts: Vec<ChartData>,
    pub legend: Vec<LegendEntry>,
    pub shoebox: Vec<ShoeboxGroup>,
    pub shadows: Vec<ShadowState>,
}

pub fn snapshot(state: &DashboardState, readings: &ReadingSet, buildings: &[Building]) -> RenderModel {
    let filter = state.filter_set();
    let charts = match state.layer {
        Layer::Primary => ChartId::all().map(|c| aggregate(readings, c, &filter)).collect(),
        Layer::Secondary(parent) => drill_down(parent, readings, &filter).unwrap_or_default(),
    };
    RenderModel {
        layer: state.layer,
        locked: state.locked,
        highlight: state.highlight,
        filter: state.filter.clone(),
        charts,
        legend: buildings
            .iter()
            .map(|b| LegendEntry {
                building: b.id.clone(),
                name: b.name.clone(),
                color: b.color,
                highlighted: filter.contains(&b.id),
            })
            .collect(),
        shoebox: state
            .shoebox
            .iter()
            .filter(|(_, charts)| !charts.is_empty())
            .map(|(b, charts)| ShoeboxGroup {
                building: b.clone(),
                charts: charts.clone(),
            })
            .collect(),
        shadows: state.shadows.values().cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Attribute, Granularity, Reading};
    use chrono::{Duration, TimeZone, Utc};

    fn readings() -> ReadingSet {
        let start = Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap();
        let rows = (0..731)
            .step_by(3)
            .flat_map(|d| {
                Attribute::ALL.into_iter().map(move |a| Reading {
                    building: "B1".into(),
                    attribute: a,
                    timestamp: start + Duration::days(d),
                    value: d as f64,
                })
            })
            .collect();
        ReadingSet::from_readings(rows).unwrap()
    }

    #[test]
    fn overview_has_twelve_charts() {
        let m = snapshot(&DashboardState::new(), &readings(), &[]);
        assert_eq!(m.charts.len(), 12);
        let ids: Vec<_> = m.charts.iter().map(|c| c.chart).collect();
        assert_eq!(ids, ChartId::all().collect::<Vec<_>>());
    }

    #[test]
    fn secondary_yearly_has_two_subcharts() {
        let state = DashboardState {
            layer: Layer::Secondary(ChartId::new(Attribute::Electricity, Granularity::Yearly)),
            ..Default::default()
        };
        let m = snapshot(&state, &readings(), &[]);
        assert_eq!(m.charts.len(), 2);
    }

    #[test]
    fn shoebox_grouped_by_building() {
        let c1 = ChartId::new(Attribute::Water, Granularity::Yearly);
        let c2 = ChartId::new(Attribute::Emission, Granularity::Weekly);
        let mut state = DashboardState::new();
        state.shoebox.insert("B1".into(), vec![c1, c2]);
        state.shoebox.insert("B3".into(), vec![c1]);
        state.shoebox.insert("B2".into(), vec![]);
        let m = snapshot(&state, &ReadingSet::new(), &[]);
        let counts: Vec<_> = m.shoebox.iter().map(|g| (g.building.as_str(), g.charts.len())).collect();
        assert_eq!(counts, [("B1", 2), ("B3", 1)]);
    }
}
