//! Workspace geometry, the geo/table projection, buildings, chart identities
//! and the energy dataset with its temporal aggregations.

pub mod aggregate;
pub mod building;
pub mod chart;
pub mod geometry;
pub mod readings;

pub use aggregate::{aggregate, drill_down, Bucket, BucketScale, ChartData, DrillError, HistogramBin, Period, Series};
pub use building::{Building, Rgb};
pub use chart::{Attribute, ChartId, Granularity};
pub use geometry::{
    geo_to_table, table_to_geo, wrap_angle, Edge, GeoPoint, MapViewport, Point, Rect, TablePose, Workspace,
};
pub use readings::{load_readings, write_readings, DateRange, Reading, ReadingError, ReadingSet};

use crate::ids::BuildingId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("invalid viewport: {0}")]
    InvalidViewport(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown chart id `{0}`")]
    UnknownChart(String),
    #[error("invalid color `{0}`, expected #rrggbb")]
    InvalidColor(String),
    #[error("building {0}: footprint must be a simple polygon with at least 3 vertices")]
    InvalidFootprint(BuildingId),
    #[error("building {0}: geo anchor and home yaw must be finite")]
    InvalidAnchor(BuildingId),
}
