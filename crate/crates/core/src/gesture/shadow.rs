//! Projection of a held proxy onto the dashboard.
//!
//! Dashboard coordinates are normalized: `u` runs left to right along the
//! backdrop edge, `v` top to bottom. `u` is the perpendicular projection of
//! the proxy onto the backdrop edge; `v = 1 - z / shadow_z_span`, so lifting a
//! proxy higher moves its shadow up the display.

use serde::{Deserialize, Serialize};

use super::GestureConfig;
use crate::ids::ProxyId;
use crate::world::{ChartId, Point, Rect, TablePose, Workspace};

/// Magnifier scale bounds. The icon grows as the proxy approaches the
/// backdrop, up to `MAX_MAGNIFIER` when touching it.
pub const MIN_MAGNIFIER: f64 = 1.0;
pub const MAX_MAGNIFIER: f64 = 4.0;
const MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub u: f64,
    pub v: f64,
}

/// Where the chart grid and shoebox strip sit on the dashboard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartLayout {
    /// 3 rows (attributes) by 4 columns (granularities).
    pub grid: Rect,
    pub shoebox: Rect,
}

impl Default for ChartLayout {
    fn default() -> Self {
        Self {
            grid: Rect::new(0.0, 0.0, 1.0, 0.8),
            shoebox: Rect::new(0.0, 0.85, 1.0, 1.0),
        }
    }
}

impl ChartLayout {
    /// Center of a chart cell, handy for scripting traces.
    pub fn cell_center(&self, chart: ChartId) -> ScreenPoint {
        let (row, col) = chart.cell();
        let cw = self.grid.width() / 4.0;
        let rh = self.grid.height() / 3.0;
        ScreenPoint {
            u: self.grid.min_x + cw * (col as f64 + 0.5),
            v: self.grid.min_y + rh * (row as f64 + 0.5),
        }
    }

    pub fn shoebox_center(&self) -> ScreenPoint {
        ScreenPoint {
            u: (self.shoebox.min_x + self.shoebox.max_x) / 2.0,
            v: (self.shoebox.min_y + self.shoebox.max_y) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", content = "chart", rename_all = "snake_case")]
pub enum Target {
    Chart(ChartId),
    Shoebox,
    None,
}

/// The on-dashboard shadow of one held proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowState {
    pub proxy: ProxyId,
    pub screen_point: ScreenPoint,
    pub magnifier_scale: f64,
    pub footprint: Vec<Point>,
}

pub fn screen_point(pose: &TablePose, ws: &Workspace, cfg: &GestureConfig) -> ScreenPoint {
    ScreenPoint {
        u: ws.along_backdrop(pose.point()),
        v: 1.0 - pose.z / cfg.shadow_z_span,
    }
}

pub fn magnifier_scale(distance_to_backdrop: f64, cfg: &GestureConfig) -> f64 {
    (cfg.backdrop_near_m / distance_to_backdrop.max(MIN_DISTANCE)).clamp(MIN_MAGNIFIER, MAX_MAGNIFIER)
}

pub fn shadow(
    proxy: &ProxyId,
    pose: &TablePose,
    footprint: &[Point],
    ws: &Workspace,
    cfg: &GestureConfig,
) -> ShadowState {
    ShadowState {
        proxy: proxy.clone(),
        screen_point: screen_point(pose, ws, cfg),
        magnifier_scale: magnifier_scale(ws.distance_to_backdrop(pose.point()), cfg),
        footprint: footprint.to_vec(),
    }
}

/// Dashboard region under a screen point.
pub fn target_of(p: ScreenPoint, layout: &ChartLayout) -> Target {
    if !(0.0..=1.0).contains(&p.u) || !(0.0..=1.0).contains(&p.v) {
        return Target::None;
    }
    let pt = Point::new(p.u, p.v);
    if layout.shoebox.contains(pt) {
        return Target::Shoebox;
    }
    let g = &layout.grid;
    if !g.contains(pt) {
        return Target::None;
    }
    let col = (((p.u - g.min_x) / g.width() * 4.0) as usize).min(3);
    let row = (((p.v - g.min_y) / g.height() * 3.0) as usize).min(2);
    ChartId::from_cell(row, col).map_or(Target::None, Target::Chart)
}
