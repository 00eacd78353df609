//! Writes the synthetic fixture bundle used by the CLI tests and the
//! determinism check.
//!
//! ```text
//! cargo run --example gen_fixtures -- crates/core/fixtures/synthetic
//! ```
//!
//! Every coin's daily price is an affine function of its mention signal
//! shifted by a known number of days, so `xcorr` must report `-shift`.
//! Background chatter steps up at mid-year to give the activity series a
//! changepoint.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use coinpulse::emotion::{EmotionLabel, LabelRecord};
use coinpulse::ingest::{PostKind, PostRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 20_210_101;

pub struct PlantedCoin {
    pub name: &'static str,
    pub terms: &'static [&'static str],
    pub subreddit: &'static str,
    pub listing: (i32, u32, u32),
    /// Price on day t follows the signal on day t - shift.
    pub shift: i64,
}

pub const COINS: &[PlantedCoin] = &[
    PlantedCoin {
        name: "Alphacoin",
        terms: &["alphacoin", "alpha coin"],
        subreddit: "alphacoin",
        listing: (2020, 6, 1),
        shift: 7,
    },
    PlantedCoin {
        name: "Betacoin",
        terms: &["betacoin"],
        subreddit: "betacoin",
        listing: (2020, 6, 1),
        shift: -4,
    },
    PlantedCoin {
        name: "Gamma Token",
        terms: &["gamma token", "gammatoken"],
        subreddit: "CryptoMarkets",
        listing: (2021, 2, 1),
        shift: 0,
    },
    PlantedCoin {
        name: "Deltacash",
        terms: &["deltacash"],
        subreddit: "CryptoMarkets",
        listing: (2020, 6, 1),
        shift: 12,
    },
];

const FIRST_DAY: (i32, u32, u32) = (2021, 1, 1);
const DAYS: i64 = 365;
const USERS: usize = 400;

const OPENERS: &[&str] = &[
    "thinking about",
    "just bought more",
    "anyone else watching",
    "sold some",
    "long term on",
    "what is going on with",
    "daily thread:",
    "new here, asking about",
];
const CLOSERS: &[&str] = &[
    "today",
    "this week",
    "after the news",
    "before the weekend",
    "lol",
    "to the moon",
    "and the wider market",
    "",
];
const CHATTER: &[&str] = &[
    "which wallet do you use",
    "fees are wild right now",
    "the market is red again",
    "dca is the way",
    "ALP and BTA both pumping",
    "is it too late to get in",
];

fn ymd((y, m, d): (i32, u32, u32)) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// Smooth positive signal indexed from `FIRST_DAY - 60`, with 60 trailing days.
fn signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(15.0..90.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.6..1.6),
            )
        })
        .collect();
    let mut walk = 0.0_f64;
    (0..len)
        .map(|t| {
            walk = 0.97 * walk + rng.gen_range(-0.5..0.5);
            let periodic: f64 = waves
                .iter()
                .map(|(period, phase, amp)| amp * (std::f64::consts::TAU * t as f64 / period + phase).sin())
                .sum();
            (6.0 + 1.6 * periodic + walk).max(0.5)
        })
        .collect()
}

/// Dyadic scores summing to exactly 1 with a strict maximum.
fn scores(rng: &mut ChaCha8Rng, post_id: String) -> EmotionLabel {
    const UNIT: u32 = 1 << 20;
    let dominant = rng.gen_range(0..6);
    let top = rng.gen_range(UNIT / 2 + 1..UNIT - UNIT / 16);
    let mut cuts: Vec<u32> = (0..4).map(|_| rng.gen_range(0..=UNIT - top)).collect();
    cuts.extend([0, UNIT - top]);
    cuts.sort_unstable();
    let mut rest = cuts.windows(2).map(|w| w[1] - w[0]);
    let parts: [u32; 6] = std::array::from_fn(|i| if i == dominant { top } else { rest.next().expect("five parts") });
    EmotionLabel::new(post_id, parts.map(|p| f64::from(p) / f64::from(UNIT)))
}

struct Bundle {
    shards: [Vec<String>; 2],
    labels: Vec<String>,
    prices: Vec<(String, String)>,
}

fn generate() -> Bundle {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let first = ymd(FIRST_DAY);
    let lead_in = 60usize;
    let total = 2 * lead_in + DAYS as usize;

    let arrivals: Vec<i64> = (0..USERS)
        .map(|i| if i < 60 { 0 } else { rng.gen_range(0..DAYS - 20) })
        .collect();
    let names: Vec<String> = (0..USERS).map(|i| format!("user_{i:03}")).collect();

    let mut posts: Vec<PostRecord> = Vec::new();
    let mut prices = Vec::new();
    let mut next_id = 0u64;
    let mut push = |posts: &mut Vec<PostRecord>, rng: &mut ChaCha8Rng, author: &str, sub: &str, day: NaiveDate, text: String, spam: Option<f64>| {
        next_id += 1;
        let created_utc = day.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp() + rng.gen_range(0..86_400);
        let submission = rng.gen_bool(0.3);
        posts.push(PostRecord {
            id: format!("p{next_id:06}"),
            author: author.to_owned(),
            subreddit: sub.to_owned(),
            kind: if submission { PostKind::Submission } else { PostKind::Comment },
            created_utc,
            title: submission.then(|| format!("post #{next_id}")),
            body: text,
            spam_score: spam,
        });
    };

    for coin in COINS {
        let s = signal(&mut rng, total);
        let listing = ymd(coin.listing);
        let mut csv = String::from("date,close\n");
        for t in 0..DAYS {
            let day = first + Duration::days(t);
            let idx = (lead_in as i64 + t - coin.shift) as usize;
            let close = 40.0 + 5.0 * s[idx] + rng.gen_range(-0.3..0.3);
            let skip = coin.name == "Deltacash" && (t == 100 || t == 101 || t == 230);
            if day >= listing && !skip {
                writeln!(csv, "{day},{close:.4}").expect("string write");
            }
        }
        prices.push((coinpulse::ingest::slug(coin.name), csv));

        for t in 0..DAYS {
            let day = first + Duration::days(t);
            let count = (s[lead_in + t as usize] + rng.gen_range(-0.45..0.45)).round().max(0.0) as usize;
            for _ in 0..count {
                let author = loop {
                    let i = (rng.gen::<f64>().powi(2) * USERS as f64) as usize;
                    if arrivals[i] <= t {
                        break &names[i];
                    }
                };
                let term = coin.terms.choose(&mut rng).expect("terms");
                let term = if rng.gen_bool(0.2) { term.to_uppercase() } else { (*term).to_owned() };
                let mut text = format!(
                    "{} {term} {}",
                    OPENERS.choose(&mut rng).expect("openers"),
                    CLOSERS.choose(&mut rng).expect("closers")
                );
                if rng.gen_bool(0.01) {
                    let other = COINS.choose(&mut rng).expect("coins");
                    write!(text, " vs {}", other.terms[0]).expect("string write");
                }
                let sub = if rng.gen_bool(0.4) { coin.subreddit } else { "CryptoCurrency" };
                let spam = rng.gen_bool(0.7).then(|| f64::from(rng.gen_range(0..50u32)) / 100.0);
                push(&mut posts, &mut rng, author, sub, day, text.trim_end().to_owned(), spam);
            }
        }
    }

    for t in 0..DAYS {
        let day = first + Duration::days(t);
        let chatter = if t < DAYS / 2 { 1..5 } else { 12..20 };
        for _ in 0..rng.gen_range(chatter) {
            let i = rng.gen_range(0..USERS);
            if arrivals[i] <= t {
                let text = CHATTER.choose(&mut rng).expect("chatter").to_string();
                push(&mut posts, &mut rng, &names[i], "CryptoCurrency", day, text, None);
            }
        }
        push(&mut posts, &mut rng, "AutoModerator", "CryptoCurrency", day, "daily discussion alphacoin betacoin".into(), Some(0.0));
        if t % 3 == 0 {
            for bot in ["promo_bot", "airdrop_king"] {
                let spam = if rng.gen_bool(0.8) { 0.97 } else { 0.2 };
                push(&mut posts, &mut rng, bot, "CryptoCurrency", day, "free gammatoken airdrop claim now".into(), Some(spam));
            }
        }
    }

    posts.sort_by(|a, b| a.created_utc.cmp(&b.created_utc).then_with(|| a.id.cmp(&b.id)));
    let mid = first + Duration::days(DAYS / 2);
    let mut shards: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    let mut labels = Vec::new();
    for post in &posts {
        let shard = usize::from(post.day() >= mid);
        shards[shard].push(post.to_line());
        if rng.gen_bool(0.95) {
            let label = scores(&mut rng, post.id.clone());
            labels.push(serde_json::to_string(&LabelRecord::from(&label)).expect("label serializes"));
        }
    }
    shards[1].insert(10, "{\"id\": \"truncated".into());
    shards[1].push(shards[0][0].clone());
    for i in 0..3 {
        let label = scores(&mut rng, format!("deleted_{i}"));
        labels.push(serde_json::to_string(&LabelRecord::from(&label)).expect("label serializes"));
    }
    Bundle { shards, labels, prices }
}

fn registry() -> String {
    let mut out = String::new();
    for coin in COINS {
        let (y, m, d) = coin.listing;
        let terms: Vec<String> = coin.terms.iter().map(|t| format!("{t:?}")).collect();
        writeln!(
            out,
            "[[coin]]\ncanonical_name = {:?}\nmatch_terms = [{}]\nlisting_date = \"{y:04}-{m:02}-{d:02}\"\n",
            coin.name,
            terms.join(", ")
        )
        .expect("string write");
    }
    out
}

const CONFIG: &str = r#"[inputs]
corpus = ["posts_h1.ndjson", "posts_h2.ndjson"]
prices = "prices"
registry = "coins.toml"
labels = "labels.ndjson"

[filters]
subreddits = ["CryptoCurrency", "alphacoin"]

[xcorr]
max_lag = 30
min_overlap = 30

[backtest]
start = "2021-03-01"
end = "2021-12-15"

[emotions]
top_subreddits = 10

[[emotions.events]]
name = "Spring rally"
month = "2021-04"

[[emotions.events]]
name = "Summer slump"
month = "2021-07"

[[emotions.events]]
name = "Year end"
month = "2021-12"
"#;

/// Writes the bundle under `dir`, replacing existing files.
pub fn write_bundle(dir: &Path) -> std::io::Result<()> {
    let bundle = generate();
    fs::create_dir_all(dir.join("prices"))?;
    for (name, lines) in ["posts_h1.ndjson", "posts_h2.ndjson"].iter().zip(&bundle.shards) {
        fs::write(dir.join(name), lines.join("\n") + "\n")?;
    }
    fs::write(dir.join("labels.ndjson"), bundle.labels.join("\n") + "\n")?;
    for (slug, csv) in &bundle.prices {
        fs::write(dir.join("prices").join(format!("{slug}.csv")), csv)?;
    }
    fs::write(dir.join("coins.toml"), registry())?;
    fs::write(dir.join("config.toml"), CONFIG)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic".into());
    write_bundle(Path::new(&dir))?;
    Ok(())
}
