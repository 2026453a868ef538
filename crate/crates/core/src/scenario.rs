//! Scenario files: the table, the map, the buildings and their proxies.
//!
//! ```json
//! {
//!   "id": "campus",
//!   "viewport": {"center": {"lat": -27.4975, "lon": 153.0137}, "zoom_level": 1000.0, "rotation": 0.0},
//!   "buildings": [{"id": "B1", "name": "Library", "color": "#1f77b4",
//!                  "footprint": [...], "geo_anchor": {...}}],
//!   "proxies": [{"proxy": "P1", "building": "B1"}]
//! }
//! ```
//!
//! Everything else (workspace, robot, control, gesture, layout, noise) has
//! defaults and may be overridden piecemeal.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dashboard::Binding;
use crate::gesture::{ChartLayout, GestureConfig};
use crate::ids::{BuildingId, ProxyId};
use crate::robot::{target_for, ControlConfig, Pose2, RobotParams, Target};
use crate::world::{
    load_readings, Building, DateRange, GeoPoint, MapViewport, Point, ReadingSet, Rgb, Workspace,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// One proxy and the building it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySpec {
    pub proxy: ProxyId,
    pub building: BuildingId,
    /// Where the carrier sits at t = 0; a dock slot along the south edge if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Pose2>,
}

/// Gaussian jitter applied to tracker samples; driven by the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerNoise {
    /// Standard deviation of x, y and z in meters.
    pub position: f64,
    /// Standard deviation of yaw, pitch and roll in radians.
    pub angle: f64,
}

impl Default for TrackerNoise {
    fn default() -> Self {
        Self {
            position: 0.0005,
            angle: 0.003,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub workspace: Workspace,
    pub viewport: MapViewport,
    pub buildings: Vec<Building>,
    pub proxies: Vec<ProxySpec>,
    /// Readings CSV, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_range: Option<DateRange>,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub gesture: GestureConfig,
    #[serde(default)]
    pub layout: ChartLayout,
    #[serde(default)]
    pub noise: TrackerNoise,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let file = File::open(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut s: Scenario = serde_json::from_reader(std::io::BufReader::new(file))?;
        if let (Some(data), Some(dir)) = (&s.dataset, path.parent()) {
            if data.is_relative() {
                s.dataset = Some(dir.join(data));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if self.id.is_empty() {
            return invalid("empty id".into());
        }
        self.workspace.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.viewport.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.robot.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.control
            .validate(&self.robot)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.gesture.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for b in &self.buildings {
            b.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            if !ids.insert(&b.id) {
                return invalid(format!("duplicate building {}", b.id));
            }
        }
        let mut proxies = BTreeSet::new();
        for p in &self.proxies {
            if !ids.contains(&p.building) {
                return invalid(format!("proxy {} bound to unknown building {}", p.proxy, p.building));
            }
            if !proxies.insert(&p.proxy) {
                return invalid(format!("duplicate proxy {}", p.proxy));
            }
            if let Some(s) = p.start {
                if !self.workspace.safe_bounds().contains(s.point()) {
                    return invalid(format!("proxy {} starts outside the safe bounds", p.proxy));
                }
            }
        }
        if !(self.noise.position >= 0.0 && self.noise.angle >= 0.0) {
            return invalid("negative tracker noise".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form; traces record it so a replay
    /// can tell whether it runs against the same configuration.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn binding(&self) -> Binding {
        self.proxies.iter().map(|p| (p.proxy.clone(), p.building.clone())).collect()
    }

    pub fn building(&self, id: &BuildingId) -> Option<&Building> {
        self.buildings.iter().find(|b| &b.id == id)
    }

    pub fn building_of(&self, proxy: &ProxyId) -> Option<&Building> {
        let spec = self.proxies.iter().find(|p| &p.proxy == proxy)?;
        self.building(&spec.building)
    }

    /// Initial carrier poses. Unplaced carriers fill dock slots spaced along
    /// the south edge, facing north.
    pub fn starts(&self) -> Vec<(ProxyId, Pose2)> {
        let nav = self.workspace.safe_bounds().shrink(self.control.inflation(&self.robot));
        let slots = self.proxies.len().max(1) as f64;
        let pitch = nav.width() / slots;
        self.proxies
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let pose = p.start.unwrap_or_else(|| {
                    Pose2::new(nav.min_x + pitch * (i as f64 + 0.5), nav.min_y, std::f64::consts::FRAC_PI_2)
                });
                (p.proxy.clone(), pose)
            })
            .collect()
    }

    /// Carrier targets under `viewport`.
    pub fn targets(&self, viewport: &MapViewport) -> Vec<(ProxyId, Target)> {
        self.proxies
            .iter()
            .filter_map(|p| {
                let b = self.building(&p.building)?;
                Some((
                    p.proxy.clone(),
                    target_for(b, viewport, &self.workspace, &self.robot, &self.control),
                ))
            })
            .collect()
    }

    /// Readings named by `dataset`, or an empty set.
    pub fn load_readings(&self) -> Result<ReadingSet, ScenarioError> {
        let Some(path) = &self.dataset else {
            return Ok(ReadingSet::new());
        };
        let file = File::open(path).map_err(|source| ScenarioError::Io {
            path: path.clone(),
            source,
        })?;
        let known = self.buildings.iter().map(|b| b.id.clone()).collect();
        load_readings(file, &known, self.date_range.as_ref()).map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    /// Five campus buildings spread over a 1 km x 0.5 km map section.
    pub fn demo() -> Self {
        let center = GeoPoint::new(-27.4975, 153.0137);
        let viewport = MapViewport {
            center,
            zoom_level: 1000.0,
            rotation: 0.0,
        };
        // (id, name, color, east m, north m, home yaw)
        let layout = [
            ("B1", "Library", "#1f77b4", -330.0, 150.0, 0.0),
            ("B2", "Engineering Hall", "#ff7f0e", -120.0, -120.0, 0.5),
            ("B3", "Student Union", "#2ca02c", 60.0, 160.0, -0.3),
            ("B4", "Recreation Centre", "#d62728", 250.0, -90.0, 1.2),
            ("B5", "Science Tower", "#9467bd", 360.0, 130.0, 0.0),
        ];
        let m_lat = crate::world::geometry::EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let m_lon = m_lat * center.lat.to_radians().cos();
        let buildings = layout
            .iter()
            .map(|&(id, name, color, east, north, yaw)| Building {
                id: id.into(),
                name: name.into(),
                color: color.parse::<Rgb>().expect("valid color"),
                footprint: vec![
                    Point::new(-30.0, -20.0),
                    Point::new(30.0, -20.0),
                    Point::new(30.0, 20.0),
                    Point::new(-30.0, 20.0),
                ],
                geo_anchor: GeoPoint::new(center.lat + north / m_lat, center.lon + east / m_lon),
                home_yaw: yaw,
            })
            .collect();
        let proxies = (1..=5)
            .map(|i| ProxySpec {
                proxy: format!("P{i}").into(),
                building: format!("B{i}").into(),
                start: None,
            })
            .collect();
        Scenario {
            id: "campus-demo".into(),
            workspace: Workspace::default(),
            viewport,
            buildings,
            proxies,
            dataset: None,
            date_range: None,
            robot: RobotParams::default(),
            control: ControlConfig::default(),
            gesture: GestureConfig::default(),
            layout: ChartLayout::default(),
            noise: TrackerNoise::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_is_valid_and_targets_are_reachable() {
        let s = Scenario::demo();
        s.validate().unwrap();
        let targets = s.targets(&s.viewport);
        assert_eq!(targets.len(), 5);
        assert!(targets.iter().all(|(_, t)| !t.unreachable));
        for (i, (_, a)) in targets.iter().enumerate() {
            for (_, b) in &targets[i + 1..] {
                assert!(a.pose.point().distance(b.pose.point()) > 0.15);
            }
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::demo();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.control.dt = 0.005;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn unknown_building_is_rejected() {
        let mut s = Scenario::demo();
        s.proxies[0].building = "B9".into();
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn json_round_trip_keeps_defaults() {
        let s = Scenario::demo();
        let json = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let minimal = r#"{"id":"x","viewport":{"center":{"lat":0.0,"lon":0.0},"zoom_level":100.0,"rotation":0.0},
            "buildings":[],"proxies":[]}"#;
        let m: Scenario = serde_json::from_str(minimal).unwrap();
        assert_eq!(m.control, ControlConfig::default());
        m.validate().unwrap();
    }
}
