//! Shared fixtures and independent reference implementations for the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use coinpulse::emotion::EmotionLabel;
use coinpulse::ingest::{PostKind, PostRecord};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn epoch(date: NaiveDate, secs: i64) -> i64 {
    date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp() + secs
}

pub const SUBREDDITS: &[&str] = &["CryptoCurrency", "Bitcoin", "ethtrader", "dogecoin", "CryptoMarkets"];

/// `n` posts spread over `span_days` from `first`, unique ids, a mix of
/// kinds and spam scores. Authors are drawn from `users` names.
pub fn random_posts(rng: &mut impl Rng, n: usize, users: usize, first: NaiveDate, span_days: i64) -> Vec<PostRecord> {
    (0..n)
        .map(|i| {
            let date = first + Duration::days(rng.gen_range(0..span_days));
            let submission = rng.gen_bool(0.25);
            PostRecord {
                id: format!("t_{i:07}"),
                author: format!("u{}", rng.gen_range(0..users)),
                subreddit: SUBREDDITS.choose(rng).unwrap().to_string(),
                kind: if submission { PostKind::Submission } else { PostKind::Comment },
                created_utc: epoch(date, rng.gen_range(0..86_400)),
                title: submission.then(|| format!("title {i} \"quoted\" ünïcödé")),
                body: format!("body {i}\twith tab and emoji 🚀 and \\ backslash"),
                spam_score: if rng.gen_bool(0.8) { Some(f64::from(rng.gen_range(0..=100u32)) / 100.0) } else { None },
            }
        })
        .collect()
}

/// Dyadic scores (multiples of 2^-20) summing to exactly one.
pub fn dyadic_label(rng: &mut impl Rng, post_id: &str) -> EmotionLabel {
    const UNIT: u32 = 1 << 20;
    let mut cuts: Vec<u32> = (0..5).map(|_| rng.gen_range(0..=UNIT)).collect();
    cuts.extend([0, UNIT]);
    cuts.sort_unstable();
    let mut parts = cuts.windows(2).map(|w| f64::from(w[1] - w[0]) / f64::from(UNIT));
    EmotionLabel::new(post_id, std::array::from_fn(|_| parts.next().unwrap()))
}

// ---- aggregation -----------------------------------------------------

pub fn month_key(date: NaiveDate) -> (i32, u32) {
    (date.year(), date.month())
}

/// Brute-force monthly `(posts, active, new)` per month, scoped either to
/// the whole corpus (`None`) or one subreddit.
pub fn brute_monthly(posts: &[PostRecord], subreddit: Option<&str>) -> BTreeMap<(i32, u32), (u64, usize, usize)> {
    let scoped: Vec<&PostRecord> = posts
        .iter()
        .filter(|p| subreddit.is_none_or(|s| p.subreddit == s))
        .collect();
    let months: BTreeSet<(i32, u32)> = scoped.iter().map(|p| month_key(p.day())).collect();
    let mut out = BTreeMap::new();
    for m in months {
        let in_month: Vec<&&PostRecord> = scoped.iter().filter(|p| month_key(p.day()) == m).collect();
        let active: BTreeSet<&str> = in_month.iter().map(|p| p.author.as_str()).collect();
        let new = active
            .iter()
            .filter(|a| !scoped.iter().any(|p| p.author == **a && month_key(p.day()) < m))
            .count();
        out.insert(m, (in_month.len() as u64, active.len(), new));
    }
    out
}

/// Monday of the ISO week containing `date`, found by walking back.
pub fn monday_of(mut date: NaiveDate) -> NaiveDate {
    while date.weekday() != chrono::Weekday::Mon {
        date = date.pred_opt().unwrap();
    }
    date
}

/// Brute-force weekly probability means: plain f64 sums divided by count.
pub fn brute_weekly(pairs: &[(PostRecord, EmotionLabel)]) -> BTreeMap<NaiveDate, (u64, [f64; 6])> {
    let mut sums: BTreeMap<NaiveDate, (u64, [f64; 6])> = BTreeMap::new();
    for (post, label) in pairs {
        let e = sums.entry(monday_of(post.day())).or_insert((0, [0.0; 6]));
        e.0 += 1;
        for i in 0..6 {
            e.1[i] += label.scores[i];
        }
    }
    for (n, s) in sums.values_mut() {
        for v in s.iter_mut() {
            *v /= *n as f64;
        }
    }
    sums
}

// ---- backtest --------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDay {
    pub action: &'static str,
    pub traded: bool,
    pub cash: f64,
    pub holdings: f64,
    pub value: f64,
}

/// Day-by-day replay of the strategy over plain vectors.
///
/// `counts[j]` is the post count `j` days after `counts_start`; trading day
/// `i` is `trade_start + i` and closes at `closes[i]`.
pub fn oracle_backtest(
    counts: &[f64],
    counts_start: NaiveDate,
    closes: &[f64],
    trade_start: NaiveDate,
    k: usize,
    fee: f64,
    initial: f64,
) -> (Vec<OracleDay>, f64) {
    let mut cash = initial;
    let mut holdings = 0.0;
    let mut out = Vec::new();
    for (i, &close) in closes.iter().enumerate() {
        let trade_day = trade_start + Duration::days(i as i64);
        let seen = (trade_day - counts_start).num_days() - k as i64;
        let today = counts[seen as usize];
        let yesterday = counts[seen as usize - 1];
        let action = if today > yesterday {
            "buy"
        } else if today < yesterday {
            "sell"
        } else {
            "hold"
        };
        let mut traded = false;
        if action == "buy" && cash > 0.0 {
            holdings += cash * (1.0 - fee) / close;
            cash = 0.0;
            traded = true;
        }
        if action == "sell" && holdings > 0.0 {
            cash += holdings * close * (1.0 - fee);
            holdings = 0.0;
            traded = true;
        }
        out.push(OracleDay {
            action,
            traded,
            cash,
            holdings,
            value: cash + holdings * close,
        });
    }
    let final_value = out.last().map_or(initial, |d| d.value);
    (out, final_value)
}

pub struct BacktestCase {
    pub counts: Vec<f64>,
    pub counts_start: NaiveDate,
    pub closes: Vec<f64>,
    pub trade_start: NaiveDate,
    pub k: usize,
    pub fee: f64,
}

pub const FEES: [f64; 3] = [0.0, 0.001, 0.01];

/// Random case with `days ≤ 60` trading days, `k ∈ 0..=5` and one of
/// [`FEES`]. Post counts start `k + 1 + slack` days before trading.
pub fn random_backtest_case(rng: &mut impl Rng) -> BacktestCase {
    let days = rng.gen_range(2..=60usize);
    let k = rng.gen_range(0..=5usize);
    let fee = *FEES.choose(rng).unwrap();
    let slack = rng.gen_range(0..3usize);
    let trade_start = day(2021, 1, 1) + Duration::days(rng.gen_range(0..300));
    let counts_start = trade_start - Duration::days((k + 1 + slack) as i64);
    let counts_len = k + 1 + slack + days;
    let counts = (0..counts_len).map(|_| f64::from(rng.gen_range(0..6u32))).collect();
    let mut price = rng.gen_range(1.0..1000.0_f64);
    let closes = (0..days)
        .map(|_| {
            price *= 1.0 + rng.gen_range(-0.1..0.1);
            price
        })
        .collect();
    BacktestCase {
        counts,
        counts_start,
        closes,
        trade_start,
        k,
        fee,
    }
}

// ---- changepoints ----------------------------------------------------

/// Sum of squared deviations from the mean, two-pass.
pub fn sse(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Minimum penalized cost over every segmentation with segments of at
/// least `min_len` points, by enumerating breakpoint subsets.
pub fn exhaustive_min_cost(values: &[f64], penalty: f64, min_len: usize) -> f64 {
    let n = values.len();
    let interior = n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u64..(1 << interior) {
        let mut bounds = vec![0];
        bounds.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
        bounds.push(n);
        if bounds.windows(2).any(|w| w[1] - w[0] < min_len) {
            continue;
        }
        let cost: f64 = bounds.windows(2).map(|w| sse(&values[w[0]..w[1]])).sum::<f64>()
            + penalty * (bounds.len() - 2) as f64;
        best = best.min(cost);
    }
    best
}

/// Optimal partitioning by quadratic dynamic programming without pruning.
pub fn optimal_partitioning(values: &[f64], penalty: f64, min_len: usize) -> f64 {
    let n = values.len();
    if n < 2 * min_len {
        return sse(values);
    }
    let mut f = vec![f64::INFINITY; n + 1];
    f[0] = 0.0;
    for t in min_len..=n {
        for s in 0..=t - min_len {
            if !f[s].is_finite() {
                continue;
            }
            let extra = if s == 0 { 0.0 } else { penalty };
            f[t] = f[t].min(f[s] + sse(&values[s..t]) + extra);
        }
    }
    f[n]
}

pub fn close_enough(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

// ---- signals ---------------------------------------------------------

/// AR(1)-smoothed noise of length `n`, zero mean, unit-ish variance.
pub fn smooth_noise(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = 0.8 * x + rng.gen_range(-1.0..1.0);
            x
        })
        .collect()
}

// ---- CLI -------------------------------------------------------------

pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_coinpulse"))
}

pub fn synthetic_config() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic/config.toml")
}

/// Header plus data rows of a report CSV, comment lines dropped.
pub fn csv_rows(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
