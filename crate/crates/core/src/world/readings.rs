//! Energy readings and their CSV form.
//!
//! ```text
//! building_id,attribute,timestamp_iso8601,value
//! B1,electricity,2016-01-01T00:00:00Z,12.5
//! ```

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::chart::Attribute;
use crate::ids::BuildingId;

pub const CSV_HEADER: [&str; 4] = ["building_id", "attribute", "timestamp_iso8601", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub building: BuildingId,
    pub attribute: Attribute,
    pub timestamp: DateTime<Utc>,
    pub value: f64,
}

/// Inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl DateRange {
    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        *t >= self.start && *t <= self.end
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReadingError {
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: unknown building id `{id}`")]
    UnknownBuilding { line: u64, id: BuildingId },
    #[error("line {line}: value {value} must be finite and non-negative")]
    InvalidValue { line: u64, value: f64 },
    #[error("line {line}: timestamp {timestamp} outside the declared date range")]
    OutOfRange { line: u64, timestamp: DateTime<Utc> },
    #[error("line {line}: duplicate reading for ({building}, {attribute}, {timestamp})")]
    Duplicate {
        line: u64,
        building: BuildingId,
        attribute: &'static str,
        timestamp: DateTime<Utc>,
    },
}

/// A validated collection of readings, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadingSet {
    readings: Vec<Reading>,
}

impl ReadingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from already-validated readings, rejecting duplicate keys.
    pub fn from_readings(readings: Vec<Reading>) -> Result<Self, ReadingError> {
        let mut seen = HashSet::with_capacity(readings.len());
        for (i, r) in readings.iter().enumerate() {
            let line = i as u64 + 2;
            if !(r.value.is_finite() && r.value >= 0.0) {
                return Err(ReadingError::InvalidValue {
                    line,
                    value: r.value,
                });
            }
            if !seen.insert((r.building.clone(), r.attribute, r.timestamp)) {
                return Err(ReadingError::Duplicate {
                    line,
                    building: r.building.clone(),
                    attribute: r.attribute.as_str(),
                    timestamp: r.timestamp,
                });
            }
        }
        Ok(Self { readings })
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Reading> {
        self.readings.iter()
    }

    pub fn as_slice(&self) -> &[Reading] {
        &self.readings
    }

    pub fn buildings(&self) -> BTreeSet<BuildingId> {
        self.readings.iter().map(|r| r.building.clone()).collect()
    }
}

impl<'a> IntoIterator for &'a ReadingSet {
    type Item = &'a Reading;
    type IntoIter = std::slice::Iter<'a, Reading>;

    fn into_iter(self) -> Self::IntoIter {
        self.readings.iter()
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    building_id: String,
    attribute: String,
    timestamp_iso8601: String,
    value: f64,
}

/// Parses the readings CSV. Every row must name a building in `known`; when
/// `range` is given, every timestamp must fall inside it.
pub fn load_readings<R: Read>(
    source: R,
    known: &BTreeSet<BuildingId>,
    range: Option<&DateRange>,
) -> Result<ReadingSet, ReadingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers().map_err(|e| ReadingError::Malformed {
        line: 1,
        reason: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(ReadingError::Malformed {
            line: 1,
            reason: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut readings = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| ReadingError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(None).map_err(|e| ReadingError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        let building = BuildingId::new(row.building_id);
        if !known.contains(&building) {
            return Err(ReadingError::UnknownBuilding { line, id: building });
        }
        let attribute: Attribute = row.attribute.parse().map_err(|_| ReadingError::Malformed {
            line,
            reason: format!("unknown attribute `{}`", row.attribute),
        })?;
        let timestamp = DateTime::parse_from_rfc3339(&row.timestamp_iso8601)
            .map_err(|e| ReadingError::Malformed {
                line,
                reason: format!("timestamp `{}`: {e}", row.timestamp_iso8601),
            })?
            .with_timezone(&Utc);
        if !(row.value.is_finite() && row.value >= 0.0) {
            return Err(ReadingError::InvalidValue {
                line,
                value: row.value,
            });
        }
        if let Some(range) = range {
            if !range.contains(&timestamp) {
                return Err(ReadingError::OutOfRange { line, timestamp });
            }
        }
        if !seen.insert((building.clone(), attribute, timestamp)) {
            return Err(ReadingError::Duplicate {
                line,
                building,
                attribute: attribute.as_str(),
                timestamp,
            });
        }
        readings.push(Reading {
            building,
            attribute,
            timestamp,
            value: row.value,
        });
    }
    Ok(ReadingSet { readings })
}

/// Writes readings in the CSV form accepted by [`load_readings`]. Values use
/// the shortest round-trip float representation, so reloading is lossless.
pub fn write_readings<W: Write>(sink: W, readings: &ReadingSet) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in readings {
        w.write_record([
            r.building.as_str(),
            r.attribute.as_str(),
            &r.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            &r.value.to_string(),
        ])?;
    }
    w.flush()
}
