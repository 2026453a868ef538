use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DashboardError;
use crate::gesture::ShadowState;
use crate::ids::{BuildingId, ProxyId};
use crate::world::ChartId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "layer", content = "parent", rename_all = "snake_case")]
pub enum Layer {
    #[default]
    Primary,
    /// Drill-down of `parent` into per-period sub-charts.
    Secondary(ChartId),
}

/// Shoebox contents: per building, charts in the order they were added.
pub type Shoebox = BTreeMap<BuildingId, Vec<ChartId>>;

/// The whole reducible state of the dashboard.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DashboardState {
    /// Buildings of currently held proxies, in pickup order.
    pub filter: Vec<BuildingId>,
    pub layer: Layer,
    pub locked: bool,
    pub shoebox: Shoebox,
    pub shadows: BTreeMap<ProxyId, ShadowState>,
    pub highlight: Option<ChartId>,
    pub held: BTreeSet<ProxyId>,
    /// Held proxies currently within the backdrop distance threshold.
    pub near: BTreeSet<ProxyId>,
}

impl DashboardState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Initial state with a shoebox restored from a previous session.
    pub fn with_shoebox(shoebox: Shoebox) -> Self {
        Self {
            shoebox,
            ..Self::default()
        }
    }

    pub fn filter_set(&self) -> BTreeSet<BuildingId> {
        self.filter.iter().cloned().collect()
    }

    /// Replaces the shadow of a held proxy; shadows of proxies that are not
    /// held are ignored. Returns whether the shadow was stored.
    pub fn update_shadow(&mut self, shadow: ShadowState) -> bool {
        if !self.held.contains(&shadow.proxy) {
            return false;
        }
        self.shadows.insert(shadow.proxy.clone(), shadow);
        true
    }

    pub fn check_invariants(&self, binding: &Binding) -> Result<(), String> {
        if self.locked && self.layer == Layer::Primary {
            return Err("locked while on the primary layer".into());
        }
        let expected: BTreeSet<&BuildingId> = self.held.iter().filter_map(|p| binding.0.get(p)).collect();
        let actual: BTreeSet<&BuildingId> = self.filter.iter().collect();
        if expected != actual || actual.len() != self.filter.len() {
            return Err(format!("filter {:?} does not match held proxies {:?}", self.filter, self.held));
        }
        if let Some(p) = self.shadows.keys().find(|p| !self.held.contains(*p)) {
            return Err(format!("shadow for proxy {p} which is not held"));
        }
        if let Some(p) = self.near.iter().find(|p| !self.held.contains(*p)) {
            return Err(format!("proxy {p} near the display but not held"));
        }
        for (b, charts) in &self.shoebox {
            let unique: BTreeSet<_> = charts.iter().collect();
            if unique.len() != charts.len() {
                return Err(format!("duplicate shoebox entry for {b}"));
            }
        }
        Ok(())
    }
}

/// Fixed proxy-to-building binding declared by the scenario.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(pub BTreeMap<ProxyId, BuildingId>);

impl Binding {
    pub fn building(&self, proxy: &ProxyId) -> Result<&BuildingId, DashboardError> {
        self.0
            .get(proxy)
            .ok_or_else(|| DashboardError::UnboundProxy(proxy.clone()))
    }
}

impl<P: Into<ProxyId>, B: Into<BuildingId>> FromIterator<(P, B)> for Binding {
    fn from_iter<I: IntoIterator<Item = (P, B)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(p, b)| (p.into(), b.into())).collect())
    }
}

/// Render hints produced alongside a transition. They never carry state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    RefreshCharts,
    HighlightChart { chart: ChartId, flip_hint: bool },
    DimNonSelected,
    ShoeboxFly { from: ChartId, building: BuildingId },
    ShoeboxBadge { chart: ChartId, building: BuildingId },
    ShowShoeboxFor { building: BuildingId },
    LockIcon { locked: bool },
    LegendHighlight { buildings: Vec<BuildingId> },
}

impl Effect {
    pub fn name(&self) -> &'static str {
        match self {
            Effect::RefreshCharts => "refresh_charts",
            Effect::HighlightChart { .. } => "highlight_chart",
            Effect::DimNonSelected => "dim_non_selected",
            Effect::ShoeboxFly { .. } => "shoebox_fly",
            Effect::ShoeboxBadge { .. } => "shoebox_badge",
            Effect::ShowShoeboxFor { .. } => "show_shoebox_for",
            Effect::LockIcon { .. } => "lock_icon",
            Effect::LegendHighlight { .. } => "legend_highlight",
        }
    }
}
