//! Bucketed emotion averages: weekly curves, per-subreddit tables, and
//! event-month radar rows.
//!
//! Score sums are accumulated in 2⁻⁹⁶ fixed point, so a tally does not depend
//! on input order or on how the input was split across shards.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::EmotionLabel;
use crate::ingest::PostRecord;
use crate::signal::month_start;

const FIXED_SCALE: f64 = 79_228_162_514_264_337_593_543_950_336.0; // 2^96

fn to_fixed(score: f64) -> i128 {
    (score * FIXED_SCALE) as i128
}

/// How a bucket's "average emotion score" is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    /// Mean of the per-class probabilities.
    #[default]
    ProbabilityMean,
    /// Share of posts whose top class is each emotion.
    LabelShare,
}

impl AverageMode {
    pub fn name(self) -> &'static str {
        match self {
            AverageMode::ProbabilityMean => "probability_mean",
            AverageMode::LabelShare => "label_share",
        }
    }
}

/// Mergeable per-bucket accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmotionTally {
    pub posts: u64,
    sums: [i128; 6],
    top: [u64; 6],
}

impl EmotionTally {
    pub fn add(&mut self, label: &EmotionLabel) {
        self.posts += 1;
        for (sum, score) in self.sums.iter_mut().zip(label.scores) {
            *sum += to_fixed(score);
        }
        self.top[label.label.index()] += 1;
    }

    pub fn merge(&mut self, other: &EmotionTally) {
        self.posts += other.posts;
        for i in 0..6 {
            self.sums[i] += other.sums[i];
            self.top[i] += other.top[i];
        }
    }

    /// Per-class averages in [`Emotion::ALL`](super::Emotion::ALL) order. Zeros for an empty tally.
    pub fn means(&self, mode: AverageMode) -> [f64; 6] {
        let mut out = [0.0; 6];
        if self.posts == 0 {
            return out;
        }
        let n = self.posts as f64;
        for (i, v) in out.iter_mut().enumerate() {
            *v = match mode {
                AverageMode::ProbabilityMean => self.sums[i] as f64 / FIXED_SCALE / n,
                AverageMode::LabelShare => self.top[i] as f64 / n,
            };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Period {
    /// ISO week, identified by its Monday.
    Week(NaiveDate),
    /// Calendar month, identified by its first day.
    Month(NaiveDate),
}

impl Period {
    pub fn week_of(date: NaiveDate) -> Self {
        Period::Week(date - Days::new(u64::from(date.weekday().num_days_from_monday())))
    }

    pub fn month_of(date: NaiveDate) -> Self {
        Period::Month(month_start(date))
    }

    pub fn start(self) -> NaiveDate {
        match self {
            Period::Week(d) | Period::Month(d) => d,
        }
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Period::Week(d) => write!(f, "{}", d.format("%G-W%V")),
            Period::Month(d) => write!(f, "{}", d.format("%Y-%m")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBucket {
    pub period: Period,
    pub mean_scores: [f64; 6],
    pub post_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EmotionCurve {
    pub buckets: Vec<CurveBucket>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum CurveScope {
    #[default]
    Corpus,
    Subreddit(String),
}

impl CurveScope {
    fn admits(&self, post: &PostRecord) -> bool {
        match self {
            CurveScope::Corpus => true,
            CurveScope::Subreddit(s) => post.subreddit == *s,
        }
    }
}

/// Tallies keyed by period; mergeable across shards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeriodTally {
    pub periods: BTreeMap<Period, EmotionTally>,
}

impl PeriodTally {
    pub fn add(&mut self, period: Period, label: &EmotionLabel) {
        self.periods.entry(period).or_default().add(label);
    }

    pub fn merge(&mut self, other: &PeriodTally) {
        for (period, tally) in &other.periods {
            self.periods.entry(*period).or_default().merge(tally);
        }
    }

    pub fn curve(&self, mode: AverageMode) -> EmotionCurve {
        EmotionCurve {
            buckets: self
                .periods
                .iter()
                .filter(|(_, t)| t.posts > 0)
                .map(|(period, t)| CurveBucket {
                    period: *period,
                    mean_scores: t.means(mode),
                    post_count: t.posts,
                })
                .collect(),
        }
    }
}

fn tally_by<'a>(
    joined: impl IntoIterator<Item = (&'a PostRecord, &'a EmotionLabel)>,
    scope: &CurveScope,
    period: fn(NaiveDate) -> Period,
) -> PeriodTally {
    let mut tally = PeriodTally::default();
    for (post, label) in joined {
        if scope.admits(post) {
            tally.add(period(post.day()), label);
        }
    }
    tally
}

/// Per-ISO-week averages of every class.
pub fn weekly_curve<'a>(
    joined: impl IntoIterator<Item = (&'a PostRecord, &'a EmotionLabel)>,
    scope: &CurveScope,
    mode: AverageMode,
) -> EmotionCurve {
    tally_by(joined, scope, Period::week_of).curve(mode)
}

/// Per-calendar-month averages of every class.
pub fn monthly_curve<'a>(
    joined: impl IntoIterator<Item = (&'a PostRecord, &'a EmotionLabel)>,
    scope: &CurveScope,
    mode: AverageMode,
) -> EmotionCurve {
    tally_by(joined, scope, Period::month_of).curve(mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Marker {
    None,
    Highest,
    Lowest,
}

impl Marker {
    pub fn symbol(self) -> &'static str {
        match self {
            Marker::None => "",
            Marker::Highest => "max",
            Marker::Lowest => "min",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubredditRow {
    pub subreddit: String,
    pub posts: u64,
    /// Averages in [`Emotion::REPORTED`](super::Emotion::REPORTED) order.
    pub means: [f64; 5],
    pub markers: [Marker; 5],
}

/// Per-subreddit averages of the five non-neutral emotions, ordered by post
/// count (descending) and truncated to `top` rows when given. Each column's
/// highest and lowest values among the reported rows are marked; a column
/// with no spread gets no markers.
pub fn subreddit_summary<'a>(
    joined: impl IntoIterator<Item = (&'a PostRecord, &'a EmotionLabel)>,
    mode: AverageMode,
    top: Option<usize>,
) -> Vec<SubredditRow> {
    let mut tallies: BTreeMap<&str, EmotionTally> = BTreeMap::new();
    for (post, label) in joined {
        tallies.entry(post.subreddit.as_str()).or_default().add(label);
    }
    let mut rows: Vec<SubredditRow> = tallies
        .into_iter()
        .map(|(subreddit, tally)| {
            let all = tally.means(mode);
            SubredditRow {
                subreddit: subreddit.to_owned(),
                posts: tally.posts,
                means: [all[0], all[1], all[2], all[3], all[4]],
                markers: [Marker::None; 5],
            }
        })
        .collect();
    rows.sort_by(|a, b| b.posts.cmp(&a.posts).then_with(|| a.subreddit.cmp(&b.subreddit)));
    if let Some(top) = top {
        rows.truncate(top);
    }
    for col in 0..5 {
        let values = rows.iter().map(|r| r.means[col]);
        let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = values.fold(f64::INFINITY, f64::min);
        if max > min {
            for row in &mut rows {
                if row.means[col] == max {
                    row.markers[col] = Marker::Highest;
                } else if row.means[col] == min {
                    row.markers[col] = Marker::Lowest;
                }
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketEvent {
    pub name: String,
    /// Any day of the event month; only year and month are used.
    pub month: NaiveDate,
}

impl MarketEvent {
    pub fn new(name: impl Into<String>, year: i32, month: u32) -> Self {
        Self {
            name: name.into(),
            month: NaiveDate::from_ymd_opt(year, month, 1).expect("valid month"),
        }
    }
}

/// The six market events used for the default radar chart.
pub fn default_events() -> Vec<MarketEvent> {
    vec![
        MarketEvent::new("Bitcoin above $1K", 2013, 11),
        MarketEvent::new("Bitcoin below $180", 2015, 1),
        MarketEvent::new("Great Crypto Crash", 2018, 9),
        MarketEvent::new("COVID-19 onset", 2020, 3),
        MarketEvent::new("Bitcoin above $60K", 2021, 3),
        MarketEvent::new("Crypto fund AUM decline", 2022, 6),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarRow {
    pub event: String,
    pub month: NaiveDate,
    pub posts: u64,
    /// Averages in [`Emotion::REPORTED`](super::Emotion::REPORTED) order.
    pub means: [f64; 5],
}

/// Corpus-wide averages of the five non-neutral emotions over each event's
/// month. Events whose month has no labelled posts are left out and reported
/// in the returned warnings.
pub fn event_radar<'a>(
    joined: impl IntoIterator<Item = (&'a PostRecord, &'a EmotionLabel)>,
    events: &[MarketEvent],
    mode: AverageMode,
) -> (Vec<RadarRow>, Vec<String>) {
    let tally = tally_by(joined, &CurveScope::Corpus, Period::month_of);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for event in events {
        let month = month_start(event.month);
        match tally.periods.get(&Period::Month(month)) {
            Some(t) if t.posts > 0 => {
                let all = t.means(mode);
                rows.push(RadarRow {
                    event: event.name.clone(),
                    month,
                    posts: t.posts,
                    means: [all[0], all[1], all[2], all[3], all[4]],
                });
            }
            _ => warnings.push(format!(
                "event {:?} ({}): no labelled posts in that month",
                event.name,
                month.format("%Y-%m")
            )),
        }
    }
    (rows, warnings)
}

/// Bucket means summed over all six classes; 1 up to rounding for
/// probability means.
pub fn mean_total(bucket: &CurveBucket) -> f64 {
    bucket.mean_scores.iter().sum()
}
