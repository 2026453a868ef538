use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::WorldError;

/// One of the three measured quantities. Each gets a row on the dashboard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Electricity,
    Emission,
    Water,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Electricity, Attribute::Emission, Attribute::Water];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Electricity => "electricity",
            Attribute::Emission => "emission",
            Attribute::Water => "water",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Attribute::Electricity => "kWh",
            Attribute::Emission => "kgCO2e",
            Attribute::Water => "L",
        }
    }

    pub fn row(self) -> usize {
        self as usize
    }
}

impl FromStr for Attribute {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "electricity" => Ok(Attribute::Electricity),
            "emission" => Ok(Attribute::Emission),
            "water" => Ok(Attribute::Water),
            other => Err(WorldError::UnknownAttribute(other.to_owned())),
        }
    }
}

/// Temporal level of a dashboard chart; each gets a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Distribution,
    Yearly,
    Monthly,
    Weekly,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::Distribution,
        Granularity::Yearly,
        Granularity::Monthly,
        Granularity::Weekly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Distribution => "distribution",
            Granularity::Yearly => "yearly",
            Granularity::Monthly => "monthly",
            Granularity::Weekly => "weekly",
        }
    }

    pub fn column(self) -> usize {
        self as usize
    }
}

/// One of the 12 primary dashboard charts.
///
/// Serialized as `"<attribute>_<granularity>"`, e.g. `"electricity_yearly"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartId {
    pub attribute: Attribute,
    pub granularity: Granularity,
}

impl ChartId {
    pub const fn new(attribute: Attribute, granularity: Granularity) -> Self {
        Self {
            attribute,
            granularity,
        }
    }

    /// All charts in dashboard order (row-major: attribute, then granularity).
    pub fn all() -> impl Iterator<Item = ChartId> {
        Attribute::ALL
            .into_iter()
            .flat_map(|a| Granularity::ALL.into_iter().map(move |g| ChartId::new(a, g)))
    }

    /// Grid cell as (row, column).
    pub fn cell(self) -> (usize, usize) {
        (self.attribute.row(), self.granularity.column())
    }

    pub fn from_cell(row: usize, col: usize) -> Option<ChartId> {
        Some(ChartId::new(
            *Attribute::ALL.get(row)?,
            *Granularity::ALL.get(col)?,
        ))
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.attribute.as_str(), self.granularity.as_str())
    }
}

impl FromStr for ChartId {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WorldError::UnknownChart(s.to_owned());
        let (a, g) = s.split_once('_').ok_or_else(bad)?;
        let attribute = a.parse().map_err(|_| bad())?;
        let granularity = Granularity::ALL
            .into_iter()
            .find(|x| x.as_str() == g)
            .ok_or_else(bad)?;
        Ok(ChartId::new(attribute, granularity))
    }
}

impl Serialize for ChartId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChartId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
