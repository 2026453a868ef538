//! Tabletop geometry and the local map projection.
//!
//! Table coordinates are meters in a top-down frame: `x` grows towards the
//! east edge, `y` towards the north edge, yaw is counter-clockwise positive.
//! The map projection is a local equirectangular one about the viewport
//! center, which is exact enough for a campus-sized map and invertible in
//! closed form.

use serde::{Deserialize, Serialize};

use super::WorldError;

/// Mean earth radius used by the local projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    North,
    South,
    East,
    West,
}

/// The tabletop plane plus the safety band kept clear along its edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
    pub safety_margin: f64,
    /// Table edge that faces the large dashboard display.
    pub backdrop_edge: Edge,
}

impl Default for Workspace {
    /// A 50-inch 16:9 panel: 1.10 m x 0.65 m (rounded).
    fn default() -> Self {
        Self {
            width: 1.10,
            height: 0.65,
            safety_margin: 0.02,
            backdrop_edge: Edge::North,
        }
    }
}

impl Workspace {
    pub fn validate(&self) -> Result<(), WorldError> {
        let ok = self.width.is_finite()
            && self.height.is_finite()
            && self.width > 0.0
            && self.height > 0.0
            && self.safety_margin >= 0.0
            && self.safety_margin < self.width.min(self.height) / 2.0;
        if ok {
            Ok(())
        } else {
            Err(WorldError::InvalidWorkspace(format!(
                "{} x {} with margin {}",
                self.width, self.height, self.safety_margin
            )))
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    /// The table shrunk by the safety margin; robot centers must stay inside.
    pub fn safe_bounds(&self) -> Rect {
        self.bounds().shrink(self.safety_margin)
    }

    /// Distance from a table point to the backdrop edge line. Negative when
    /// the point lies beyond the edge.
    pub fn distance_to_backdrop(&self, p: Point) -> f64 {
        match self.backdrop_edge {
            Edge::North => self.height - p.y,
            Edge::South => p.y,
            Edge::East => self.width - p.x,
            Edge::West => p.x,
        }
    }

    /// Position along the backdrop edge, normalized to [0, 1] from the left
    /// of a user standing at the table and facing the display.
    pub fn along_backdrop(&self, p: Point) -> f64 {
        match self.backdrop_edge {
            Edge::North => p.x / self.width,
            Edge::South => 1.0 - p.x / self.width,
            Edge::East => 1.0 - p.y / self.height,
            Edge::West => p.y / self.height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle, `min` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub const fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn shrink(&self, by: f64) -> Rect {
        Rect::new(
            self.min_x + by,
            self.min_y + by,
            self.max_x - by,
            self.max_y - by,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min_x, self.max_x),
            p.y.clamp(self.min_y, self.max_y),
        )
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// A tracked 6-DoF pose in table coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TablePose {
    pub t_ms: u64,
    pub x: f64,
    pub y: f64,
    /// Height above the table surface.
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl TablePose {
    pub fn on_table(x: f64, y: f64, yaw: f64, t_ms: u64) -> Self {
        Self {
            x,
            y,
            z: 0.0,
            yaw,
            pitch: 0.0,
            roll: 0.0,
            t_ms,
        }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.z, self.yaw, self.pitch, self.roll]
            .iter()
            .all(|v| v.is_finite())
            && self.z >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// What part of the campus map is shown on the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapViewport {
    pub center: GeoPoint,
    /// Map scale: ground meters shown by one meter of table. Doubling it
    /// halves the on-table distance between two places.
    pub zoom_level: f64,
    /// Counter-clockwise rotation of the map about the table center.
    pub rotation: f64,
}

impl MapViewport {
    pub fn validate(&self) -> Result<(), WorldError> {
        let finite = [
            self.center.lat,
            self.center.lon,
            self.zoom_level,
            self.rotation,
        ]
        .iter()
        .all(|v| v.is_finite());
        if finite && self.zoom_level > 0.0 && self.center.lat.abs() < 90.0 {
            Ok(())
        } else {
            Err(WorldError::InvalidViewport(format!("{self:?}")))
        }
    }

    fn meters_per_deg(&self) -> (f64, f64) {
        let per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (per_deg_lat * self.center.lat.to_radians().cos(), per_deg_lat)
    }
}

/// Projects a geographic point onto the table under `viewport`.
///
/// Points outside the table are returned as-is; callers clamp or hide them.
pub fn geo_to_table(viewport: &MapViewport, geo: GeoPoint, ws: &Workspace) -> Point {
    let (m_lon, m_lat) = viewport.meters_per_deg();
    let east = (geo.lon - viewport.center.lon) * m_lon / viewport.zoom_level;
    let north = (geo.lat - viewport.center.lat) * m_lat / viewport.zoom_level;
    let (s, c) = viewport.rotation.sin_cos();
    let c0 = ws.center();
    Point::new(c0.x + c * east - s * north, c0.y + s * east + c * north)
}

/// Inverse of [`geo_to_table`].
pub fn table_to_geo(viewport: &MapViewport, p: Point, ws: &Workspace) -> GeoPoint {
    let c0 = ws.center();
    let (dx, dy) = (p.x - c0.x, p.y - c0.y);
    let (s, c) = viewport.rotation.sin_cos();
    let east = c * dx + s * dy;
    let north = -s * dx + c * dy;
    let (m_lon, m_lat) = viewport.meters_per_deg();
    GeoPoint::new(
        viewport.center.lat + north * viewport.zoom_level / m_lat,
        viewport.center.lon + east * viewport.zoom_level / m_lon,
    )
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
