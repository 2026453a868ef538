//! Chart aggregation and drill-down.
//!
//! Overview charts average across the whole date range: Yearly per calendar
//! year, Monthly per month-of-year, Weekly per day-of-week. Drill-down
//! produces one sub-chart per period of the parent chart, each one step finer
//! and restricted to that period:
//!
//! | parent  | sub-chart per   | buckets            |
//! |---------|-----------------|--------------------|
//! | Yearly  | calendar year   | calendar month     |
//! | Monthly | calendar month  | day-of-week        |
//! | Weekly  | ISO week        | calendar day       |
//!
//! Buckets without readings are omitted, never zero-filled.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Datelike, NaiveDate, Utc, Weekday};
use serde::{Deserialize, Serialize};

use super::chart::{ChartId, Granularity};
use super::readings::{Reading, ReadingSet};
use crate::ids::BuildingId;

/// Number of equal-width bins in distribution charts.
pub const HISTOGRAM_BINS: usize = 12;

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketScale {
    Histogram,
    Year,
    MonthOfYear,
    DayOfWeek,
    Month,
    Day,
}

/// The slice of time a drill-down sub-chart covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Period {
    Year { year: i32 },
    Month { year: i32, month: u32 },
    IsoWeek { year: i32, week: u32 },
}

impl Period {
    pub fn label(&self) -> String {
        match *self {
            Period::Year { year } => year.to_string(),
            Period::Month { year, month } => format!("{year}-{month:02}"),
            Period::IsoWeek { year, week } => format!("{year}-W{week:02}"),
        }
    }

    fn of(granularity: Granularity, t: &DateTime<Utc>) -> Option<Period> {
        match granularity {
            Granularity::Distribution => None,
            Granularity::Yearly => Some(Period::Year { year: t.year() }),
            Granularity::Monthly => Some(Period::Month {
                year: t.year(),
                month: t.month(),
            }),
            Granularity::Weekly => {
                let w = t.iso_week();
                Some(Period::IsoWeek {
                    year: w.year(),
                    week: w.week(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub building: BuildingId,
    pub buckets: Vec<Bucket>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub chart: ChartId,
    /// Set on drill-down sub-charts.
    pub period: Option<Period>,
    pub scale: BucketScale,
    pub series: Vec<Series>,
    pub histogram: Option<Vec<HistogramBin>>,
}

impl ChartData {
    pub fn is_empty(&self) -> bool {
        self.series.is_empty() && self.histogram.as_ref().is_none_or(|h| h.is_empty())
    }

    pub fn series_for(&self, building: &BuildingId) -> Option<&Series> {
        self.series.iter().find(|s| &s.building == building)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DrillError {
    #[error("chart {0} has no secondary layer")]
    NoSecondaryLayer(ChartId),
}

/// Sortable bucket key. Ordering is chronological within one scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Year(i32),
    MonthOfYear(u32),
    DayOfWeek(u32),
    Month(i32, u32),
    Day(NaiveDate),
}

impl Key {
    fn of(scale: BucketScale, t: &DateTime<Utc>) -> Key {
        match scale {
            BucketScale::Year => Key::Year(t.year()),
            BucketScale::MonthOfYear => Key::MonthOfYear(t.month()),
            BucketScale::DayOfWeek => Key::DayOfWeek(t.weekday().num_days_from_monday()),
            BucketScale::Month => Key::Month(t.year(), t.month()),
            BucketScale::Day | BucketScale::Histogram => Key::Day(t.date_naive()),
        }
    }

    fn label(self) -> String {
        match self {
            Key::Year(y) => y.to_string(),
            Key::MonthOfYear(m) => MONTHS[m as usize - 1].to_owned(),
            Key::DayOfWeek(d) => weekday_label(d),
            Key::Month(y, m) => format!("{y}-{m:02}"),
            Key::Day(d) => d.format("%Y-%m-%d").to_string(),
        }
    }
}

fn weekday_label(from_monday: u32) -> String {
    let mut day = Weekday::Mon;
    for _ in 0..from_monday {
        day = day.succ();
    }
    day.to_string()
}

fn selected<'a>(
    readings: &'a ReadingSet,
    chart: ChartId,
    filter: &'a BTreeSet<BuildingId>,
) -> impl Iterator<Item = &'a Reading> + 'a {
    readings
        .iter()
        .filter(move |r| r.attribute == chart.attribute)
        .filter(move |r| filter.is_empty() || filter.contains(&r.building))
}

fn overview_scale(granularity: Granularity) -> BucketScale {
    match granularity {
        Granularity::Distribution => BucketScale::Histogram,
        Granularity::Yearly => BucketScale::Year,
        Granularity::Monthly => BucketScale::MonthOfYear,
        Granularity::Weekly => BucketScale::DayOfWeek,
    }
}

fn drill_scale(granularity: Granularity) -> Option<BucketScale> {
    match granularity {
        Granularity::Distribution => None,
        Granularity::Yearly => Some(BucketScale::Month),
        Granularity::Monthly => Some(BucketScale::DayOfWeek),
        Granularity::Weekly => Some(BucketScale::Day),
    }
}

fn bucket_series<'a>(rows: impl Iterator<Item = &'a Reading>, scale: BucketScale) -> Vec<Series> {
    let mut sums: BTreeMap<&BuildingId, BTreeMap<Key, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let slot = sums
            .entry(&r.building)
            .or_default()
            .entry(Key::of(scale, &r.timestamp))
            .or_insert((0.0, 0));
        slot.0 += r.value;
        slot.1 += 1;
    }
    sums.into_iter()
        .map(|(building, buckets)| Series {
            building: building.clone(),
            buckets: buckets
                .into_iter()
                .map(|(k, (sum, count))| Bucket {
                    label: k.label(),
                    mean: sum / count as f64,
                    count,
                })
                .collect(),
        })
        .collect()
}

/// Equal-width histogram over `[min, max]` of `values`. The last bin is
/// closed on the right. A constant input lands entirely in the first bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: min + width * i as f64,
            upper: if i + 1 == bins {
                max
            } else {
                min + width * (i + 1) as f64
            },
            count: 0,
        })
        .collect();
    for &v in values {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[idx].count += 1;
    }
    out
}

/// Aggregates one dashboard chart. An empty `filter` means all buildings.
pub fn aggregate(readings: &ReadingSet, chart: ChartId, filter: &BTreeSet<BuildingId>) -> ChartData {
    let scale = overview_scale(chart.granularity);
    if chart.granularity == Granularity::Distribution {
        let values: Vec<f64> = selected(readings, chart, filter).map(|r| r.value).collect();
        return ChartData {
            chart,
            period: None,
            scale,
            series: Vec::new(),
            histogram: Some(histogram(&values, HISTOGRAM_BINS)),
        };
    }
    ChartData {
        chart,
        period: None,
        scale,
        series: bucket_series(selected(readings, chart, filter), scale),
        histogram: None,
    }
}

/// Replaces `chart` with its per-period sub-charts, in chronological order.
pub fn drill_down(
    chart: ChartId,
    readings: &ReadingSet,
    filter: &BTreeSet<BuildingId>,
) -> Result<Vec<ChartData>, DrillError> {
    let scale = drill_scale(chart.granularity).ok_or(DrillError::NoSecondaryLayer(chart))?;
    let mut by_period: BTreeMap<Period, Vec<&Reading>> = BTreeMap::new();
    for r in selected(readings, chart, filter) {
        let p = Period::of(chart.granularity, &r.timestamp).expect("non-distribution chart");
        by_period.entry(p).or_default().push(r);
    }
    Ok(by_period
        .into_iter()
        .map(|(period, rows)| ChartData {
            chart,
            period: Some(period),
            scale,
            series: bucket_series(rows.into_iter(), scale),
            histogram: None,
        })
        .collect())
}
