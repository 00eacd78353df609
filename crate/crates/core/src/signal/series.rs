use std::collections::BTreeMap;

use chrono::{Datelike, Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::ingest::PostRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Month,
}

impl Granularity {
    /// The bucket containing `date`.
    pub fn bucket(self, date: NaiveDate) -> NaiveDate {
        match self {
            Granularity::Day => date,
            Granularity::Month => month_start(date),
        }
    }

    /// `start` advanced by `steps` buckets.
    pub fn step(self, start: NaiveDate, steps: usize) -> NaiveDate {
        match self {
            Granularity::Day => start + Days::new(steps as u64),
            Granularity::Month => start + Months::new(steps as u32),
        }
    }

    /// Number of whole buckets from `from` to `to` (negative when `to` is earlier).
    pub fn distance(self, from: NaiveDate, to: NaiveDate) -> i64 {
        match self {
            Granularity::Day => (to - from).num_days(),
            Granularity::Month => {
                (to.year() as i64 * 12 + to.month0() as i64)
                    - (from.year() as i64 * 12 + from.month0() as i64)
            }
        }
    }
}

pub fn month_start(date: NaiveDate) -> NaiveDate {
    date.with_day(1).expect("day 1 exists")
}

/// A dense, regularly spaced series: `values[i]` belongs to bucket
/// `start + i` at the series granularity. Daily series are the common case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub start: NaiveDate,
    pub granularity: Granularity,
    pub values: Vec<f64>,
}

impl Series {
    pub fn daily(label: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            start,
            granularity: Granularity::Day,
            values,
        }
    }

    pub fn monthly(label: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            start: month_start(start),
            granularity: Granularity::Month,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.granularity.step(self.start, index)
    }

    /// Last covered bucket. Panics on an empty series.
    pub fn end(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    /// Position of the bucket containing `date`, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = self
            .granularity
            .distance(self.start, self.granularity.bucket(date));
        usize::try_from(offset).ok().filter(|&i| i < self.len())
    }

    /// Signed offset of `date` relative to `start`, without range checks.
    pub fn offset_of(&self, date: NaiveDate) -> i64 {
        self.granularity
            .distance(self.start, self.granularity.bucket(date))
    }

    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(|i| self.date_at(i))
    }

    /// Restriction to `[from, to]` (either bound optional). `None` when the
    /// window does not intersect the series.
    pub fn window(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Option<Series> {
        if self.is_empty() {
            return None;
        }
        let lo = from.map_or(0, |d| self.offset_of(d).max(0));
        let hi = to.map_or(self.len() as i64 - 1, |d| {
            self.offset_of(d).min(self.len() as i64 - 1)
        });
        if lo > hi {
            return None;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        Some(Series {
            label: self.label.clone(),
            start: self.date_at(lo),
            granularity: self.granularity,
            values: self.values[lo..=hi].to_vec(),
        })
    }

    pub fn with_values(&self, values: Vec<f64>) -> Series {
        Series {
            label: self.label.clone(),
            start: self.start,
            granularity: self.granularity,
            values,
        }
    }
}

/// Divides every value by the series maximum. Series whose values are all
/// non-positive are scaled by the largest magnitude instead, so the result
/// always lies in [-1, 1].
pub fn normalize_max(series: &Series) -> Result<Series, SignalError> {
    let max = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let divisor = if max > 0.0 {
        max
    } else {
        series.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    };
    if !(divisor > 0.0) || !divisor.is_finite() {
        return Err(SignalError::DegenerateSeries(format!(
            "{}: cannot normalize an all-zero series",
            series.label
        )));
    }
    Ok(series.with_values(series.values.iter().map(|v| v / divisor).collect()))
}

/// Subtracts the mean and divides by the population standard deviation.
/// Constant series map to all zeros.
pub fn z_score(series: &Series) -> Series {
    let n = series.len() as f64;
    if series.is_empty() {
        return series.clone();
    }
    let mean = series.values.iter().sum::<f64>() / n;
    let var = series.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let values = if sd > 0.0 {
        series.values.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; series.len()]
    };
    series.with_values(values)
}

/// Dense count series of the given dates from the first to the last observed
/// bucket, zero-filled. `None` for empty input.
pub fn count_series(
    label: impl Into<String>,
    dates: impl IntoIterator<Item = NaiveDate>,
    granularity: Granularity,
) -> Option<Series> {
    let mut tally: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for d in dates {
        *tally.entry(granularity.bucket(d)).or_default() += 1;
    }
    let (&first, _) = tally.first_key_value()?;
    let (&last, _) = tally.last_key_value()?;
    let len = granularity.distance(first, last) as usize + 1;
    let mut values = vec![0.0; len];
    for (bucket, count) in tally {
        values[granularity.distance(first, bucket) as usize] = count as f64;
    }
    Some(Series {
        label: label.into(),
        start: first,
        granularity,
        values,
    })
}

/// Post-count series for an already grouped set of posts.
pub fn aggregate<'a>(
    posts: impl IntoIterator<Item = &'a PostRecord>,
    label: impl Into<String>,
    granularity: Granularity,
) -> Option<Series> {
    count_series(label, posts.into_iter().map(PostRecord::day), granularity)
}

/// Extends `series` with zeros so it covers `[from, to]`. Used to put post
/// counts on the same grid as a price series.
pub fn zero_extend(series: &Series, from: NaiveDate, to: NaiveDate) -> Series {
    let g = series.granularity;
    let from = g.bucket(from).min(series.start);
    let to = if series.is_empty() {
        g.bucket(to)
    } else {
        g.bucket(to).max(series.end())
    };
    let len = g.distance(from, to) as usize + 1;
    let mut values = vec![0.0; len];
    let shift = g.distance(from, series.start) as usize;
    values[shift..shift + series.len()].copy_from_slice(&series.values);
    Series {
        label: series.label.clone(),
        start: from,
        granularity: g,
        values,
    }
}
