//! Analysis orchestration. Inputs are loaded once per run; every analysis
//! writes its artifacts through a single [`ArtifactWriter`] and records
//! warnings and errors for the run manifest.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigError, RunConfig};
use super::Command;
use crate::backtest::{
    lookback_from_lag, portfolio_summary, run_backtest, BacktestLedger, StrategyConfig,
};
use crate::corpus_stats::{
    build_profiles, filter_spam_users, monthly_activity, ActivityTable, GroupBy, Scope,
    UserProfile,
};
use crate::emotion::{
    event_radar, join_labels, subreddit_summary, weekly_curve, CurveScope, Emotion, EmotionCurve,
    LabelIndex,
};
use crate::ingest::{
    load_posts, load_prices, CoinEntry, CoinRegistry, LoadManifest, MatchOptions,
    MentionMatcher, PostRecord, PriceHistory,
};
use crate::report::{
    line_chart, num, radar_chart, ArtifactWriter, CsvTable, LineSeries, RadarSeries, ENGINE,
    VERSION,
};
use crate::signal::{
    count_series, default_penalty, interpret_lag, normalize_max, z_score, zero_extend,
    CrossCorrelator, Granularity, LagCorrelation, Pelt, Series,
};

/// Result of one command.
#[derive(Debug)]
pub enum Outcome {
    Ok,
    ConfigError(String),
    AnalysisFailed(Vec<String>),
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Ok => f.write_str("ok"),
            Outcome::ConfigError(e) => write!(f, "config error: {e}"),
            Outcome::AnalysisFailed(errors) => write!(f, "analysis failed: {}", errors.join("; ")),
        }
    }
}

struct Corpus {
    shards: Vec<(PathBuf, LoadManifest)>,
    cross_shard_duplicates: usize,
    raw_posts: usize,
    excluded: Vec<UserProfile>,
    /// Spam-filtered posts ordered by `(created_utc, id)`.
    posts: Vec<PostRecord>,
}

struct Coin {
    entry: CoinEntry,
    /// Daily mention counts from the later of the listing date and the
    /// corpus start through the corpus end.
    posts: Option<Series>,
    mention_count: usize,
    price: Option<PriceHistory>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    engine: &'a str,
    version: &'a str,
    config_hash: &'a str,
    command: &'a str,
    status: &'a str,
    artifacts: &'a [String],
    warnings: &'a [String],
    errors: &'a [String],
}

/// Fatal condition that stops the current command.
struct Abort(String);

type Step = Result<(), Abort>;

fn io_abort(e: std::io::Error) -> Abort {
    Abort(format!("writing artifacts: {e}"))
}

pub struct Pipeline {
    cfg: RunConfig,
    hash: String,
    pool: rayon::ThreadPool,
    writer: ArtifactWriter,
    warnings: Vec<String>,
    errors: Vec<String>,
    corpus: Option<Corpus>,
    registry: Option<CoinRegistry>,
    coins: Option<Vec<Coin>>,
    xcorr: Option<Vec<(String, Result<LagCorrelation, String>)>>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self, Outcome> {
        let hash = cfg.fingerprint();
        let out = cfg
            .output
            .clone()
            .ok_or_else(|| Outcome::ConfigError("output directory not set".into()))?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Outcome::AnalysisFailed(vec![format!("thread pool: {e}")]))?;
        let writer = ArtifactWriter::new(out, &hash).map_err(|e| {
            Outcome::AnalysisFailed(vec![format!("creating output directory: {e}")])
        })?;
        Ok(Self {
            cfg,
            hash,
            pool,
            writer,
            warnings: Vec::new(),
            errors: Vec::new(),
            corpus: None,
            registry: None,
            coins: None,
            xcorr: None,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn artifacts(&self) -> &[String] {
        self.writer.artifacts()
    }

    fn check_requirements(&self, command: Command) -> Result<(), String> {
        let needs_coins = matches!(command, Command::Xcorr | Command::Backtest);
        if needs_coins && self.cfg.inputs.registry.is_none() {
            return Err(format!("{} needs inputs.registry", command.name()));
        }
        if needs_coins && self.cfg.inputs.prices.is_none() {
            return Err(format!("{} needs inputs.prices", command.name()));
        }
        if command == Command::Emotions && self.cfg.inputs.labels.is_none() {
            return Err("emotions needs inputs.labels".into());
        }
        Ok(())
    }

    /// Runs `command`, then writes `manifest.json` whatever the outcome.
    pub fn execute(&mut self, command: Command) -> Outcome {
        if let Err(e) = self.check_requirements(command) {
            return Outcome::ConfigError(e);
        }
        if self.cfg.inputs.registry.is_some() {
            if let Err(Abort(e)) = self.registry() {
                return Outcome::ConfigError(e);
            }
        }
        let result = match command {
            Command::Ingest => self.ingest(),
            Command::Activity => self.activity(),
            Command::Users => self.users(),
            Command::Retention => self.retention(),
            Command::Changepoints => self.changepoints(),
            Command::Xcorr => self.xcorr_report(),
            Command::Backtest => self.backtest(),
            Command::Emotions => self.emotions(),
            Command::ReportAll => self.report_all(),
        };
        if let Err(Abort(e)) = result {
            self.errors.push(e);
        }
        let status = if self.errors.is_empty() { "ok" } else { "failed" };
        let mut artifacts = self.writer.artifacts().to_vec();
        artifacts.push("manifest.json".into());
        let manifest = Manifest {
            engine: ENGINE,
            version: VERSION,
            config_hash: &self.hash,
            command: command.name(),
            status,
            artifacts: &artifacts,
            warnings: &self.warnings,
            errors: &self.errors,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        if let Err(e) = self.writer.write_text("manifest.json", &json) {
            self.errors.push(format!("writing manifest: {e}"));
        }
        if self.errors.is_empty() {
            Outcome::Ok
        } else {
            Outcome::AnalysisFailed(self.errors.clone())
        }
    }

    fn report_all(&mut self) -> Step {
        self.ingest()?;
        self.activity()?;
        self.users()?;
        self.retention()?;
        self.changepoints()?;
        if self.cfg.inputs.registry.is_some() && self.cfg.inputs.prices.is_some() {
            self.xcorr_report()?;
            self.backtest()?;
        } else {
            self.warnings
                .push("registry or price directory not configured; skipping xcorr and backtest".into());
        }
        if self.cfg.inputs.labels.is_some() {
            self.emotions()?;
        } else {
            self.warnings
                .push("no label file configured; skipping emotions".into());
        }
        Ok(())
    }

    // ---- loading -------------------------------------------------------

    fn corpus(&mut self) -> Result<&Corpus, Abort> {
        if self.corpus.is_none() {
            let corpus = self.load_corpus()?;
            self.corpus = Some(corpus);
        }
        Ok(self.corpus.as_ref().expect("loaded"))
    }

    fn load_corpus(&self) -> Result<Corpus, Abort> {
        let dialect = self.cfg.inputs.dialect;
        let paths = &self.cfg.inputs.corpus;
        let loaded: Vec<_> = self
            .pool
            .install(|| paths.par_iter().map(|p| load_posts(p, dialect)).collect());

        let mut shards = Vec::new();
        let mut seen = HashSet::new();
        let mut posts = Vec::new();
        let mut cross_shard_duplicates = 0;
        for (path, result) in paths.iter().zip(loaded) {
            let (shard_posts, manifest) = result.map_err(|e| Abort(e.to_string()))?;
            shards.push((path.clone(), manifest));
            for post in shard_posts {
                if seen.insert(post.id.clone()) {
                    posts.push(post);
                } else {
                    cross_shard_duplicates += 1;
                }
            }
        }
        let raw_posts = posts.len();

        let spam = &self.cfg.spam;
        let (posts, excluded) = if spam.enabled {
            let profiles = build_profiles(&posts, spam.post_threshold);
            let excluded_names = filter_spam_users(&profiles, spam.user_threshold);
            let kept: Vec<PostRecord> = posts
                .into_iter()
                .filter(|p| !excluded_names.contains(&p.author))
                .collect();
            let excluded = profiles
                .into_iter()
                .filter(|p| excluded_names.contains(&p.author))
                .collect();
            (kept, excluded)
        } else {
            (posts, Vec::new())
        };
        let mut posts = posts;
        posts.sort_by(|a, b| a.created_utc.cmp(&b.created_utc).then_with(|| a.id.cmp(&b.id)));
        Ok(Corpus {
            shards,
            cross_shard_duplicates,
            raw_posts,
            excluded,
            posts,
        })
    }

    fn in_window(&self, post: &PostRecord) -> bool {
        let day = post.day();
        self.cfg.filters.from.is_none_or(|f| day >= f) && self.cfg.filters.to.is_none_or(|t| day <= t)
    }

    fn windowed_posts(&mut self) -> Result<Vec<PostRecord>, Abort> {
        self.corpus()?;
        let corpus = self.corpus.as_ref().expect("loaded");
        Ok(corpus
            .posts
            .iter()
            .filter(|p| self.in_window(p))
            .cloned()
            .collect())
    }

    fn registry(&mut self) -> Result<&CoinRegistry, Abort> {
        if self.registry.is_none() {
            let path = self
                .cfg
                .inputs
                .registry
                .clone()
                .ok_or_else(|| Abort("no registry configured".into()))?;
            let registry = CoinRegistry::load(&path).map_err(|e| Abort(e.to_string()))?;
            for name in &self.cfg.filters.coins {
                if registry.get(name).is_none() {
                    return Err(Abort(format!("coin {name:?} is not in the registry")));
                }
            }
            self.registry = Some(registry);
        }
        Ok(self.registry.as_ref().expect("loaded"))
    }

    fn selected_entries(&mut self) -> Result<Vec<CoinEntry>, Abort> {
        let wanted = self.cfg.filters.coins.clone();
        let registry = self.registry()?;
        Ok(registry
            .entries
            .iter()
            .filter(|e| wanted.is_empty() || wanted.contains(&e.canonical_name))
            .cloned()
            .collect())
    }

    fn coins(&mut self) -> Result<&[Coin], Abort> {
        if self.coins.is_none() {
            let coins = self.load_coins()?;
            self.coins = Some(coins);
        }
        Ok(self.coins.as_deref().expect("loaded"))
    }

    fn load_coins(&mut self) -> Result<Vec<Coin>, Abort> {
        let entries = self.selected_entries()?;
        let options = MatchOptions {
            plural_suffix: self.cfg.mentions.plural_suffix,
        };
        let matcher = MentionMatcher::new(self.registry()?, options);
        self.corpus()?;
        let corpus = self.corpus.as_ref().expect("loaded");

        let matches: Vec<BTreeSet<String>> = self
            .pool
            .install(|| corpus.posts.par_iter().map(|p| matcher.match_post(p)).collect());
        let span = corpus
            .posts
            .first()
            .zip(corpus.posts.last())
            .map(|(a, b)| (a.day(), b.day()));

        let price_dir = self.cfg.inputs.prices.clone();
        let mut coins = Vec::new();
        let mut warnings = Vec::new();
        for entry in entries {
            let days: Vec<NaiveDate> = corpus
                .posts
                .iter()
                .zip(&matches)
                .filter(|(p, m)| m.contains(&entry.canonical_name) && p.day() >= entry.listing_date)
                .map(|(p, _)| p.day())
                .collect();
            let mention_count = days.len();
            let posts = match (count_series(entry.canonical_name.clone(), days, Granularity::Day), span) {
                (Some(series), Some((first, last))) => {
                    Some(zero_extend(&series, first.max(entry.listing_date), last))
                }
                _ => None,
            };
            let price = match &price_dir {
                Some(dir) => {
                    let path = dir.join(format!("{}.csv", entry.slug()));
                    if path.is_file() {
                        Some(load_prices(&path, &entry.canonical_name).map_err(|e| Abort(e.to_string()))?)
                    } else {
                        warnings.push(format!(
                            "{}: no price file {}",
                            entry.canonical_name,
                            path.display()
                        ));
                        None
                    }
                }
                None => None,
            };
            if let Some(p) = &price {
                if !p.filled.is_empty() {
                    warnings.push(format!(
                        "{}: {} missing price days forward-filled",
                        entry.canonical_name,
                        p.filled.len()
                    ));
                }
            }
            coins.push(Coin {
                entry,
                posts,
                mention_count,
                price,
            });
        }
        self.warnings.extend(warnings);
        Ok(coins)
    }

    fn selected_subreddits(&self, table: &ActivityTable) -> Vec<Scope> {
        table
            .scopes
            .keys()
            .filter(|s| match s {
                Scope::Corpus => false,
                Scope::Subreddit(name) => {
                    self.cfg.filters.subreddits.is_empty() || self.cfg.filters.subreddits.contains(name)
                }
            })
            .cloned()
            .collect()
    }

    // ---- commands ------------------------------------------------------

    fn ingest(&mut self) -> Step {
        self.corpus()?;
        let corpus = self.corpus.as_ref().expect("loaded");
        let mut table = CsvTable::new(["source", "parsed", "skipped"]);
        for (path, m) in &corpus.shards {
            table.row([
                path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
                m.parsed.to_string(),
                m.skipped.to_string(),
            ]);
        }
        table.note(format!(
            "posts={} cross_shard_duplicates={} excluded_users={} kept_posts={}",
            corpus.raw_posts,
            corpus.cross_shard_duplicates,
            corpus.excluded.len(),
            corpus.posts.len()
        ));
        let mut spam = CsvTable::new(["author", "post_count", "spam_post_count", "spam_share"]);
        for p in &corpus.excluded {
            spam.row([
                p.author.clone(),
                p.post_count.to_string(),
                p.spam_post_count.to_string(),
                p.spam_share().map_or_else(String::new, |s| num(s, 4)),
            ]);
        }
        self.writer.write_csv("ingest.csv", &table).map_err(io_abort)?;
        self.writer.write_csv("spam_users.csv", &spam).map_err(io_abort)?;

        if self.cfg.inputs.registry.is_some() {
            let coins = self.coins()?;
            let mut mentions = CsvTable::new(["coin", "posts", "first_day", "last_day"]);
            for coin in coins {
                let (first, last) = coin
                    .posts
                    .as_ref()
                    .map(|s| (s.start.to_string(), s.end().to_string()))
                    .unwrap_or_default();
                mentions.row([
                    coin.entry.canonical_name.clone(),
                    coin.mention_count.to_string(),
                    first,
                    last,
                ]);
            }
            self.writer.write_csv("mentions.csv", &mentions).map_err(io_abort)?;
        }
        Ok(())
    }

    fn activity(&mut self) -> Step {
        let posts = self.windowed_posts()?;
        let mut scopes: Vec<(Scope, Series)> = Vec::new();
        if let Some(s) = count_series("all", posts.iter().map(PostRecord::day), Granularity::Month) {
            scopes.push((Scope::Corpus, s));
        }
        let mut by_sub: BTreeMap<&str, Vec<NaiveDate>> = BTreeMap::new();
        for p in &posts {
            if self.cfg.filters.subreddits.is_empty() || self.cfg.filters.subreddits.contains(&p.subreddit) {
                by_sub.entry(&p.subreddit).or_default().push(p.day());
            }
        }
        for (sub, days) in by_sub {
            if let Some(s) = count_series(sub, days, Granularity::Month) {
                scopes.push((Scope::Subreddit(sub.to_owned()), s));
            }
        }

        let mut table = CsvTable::new(["month", "scope", "posts", "normalized"]);
        let mut lines = Vec::new();
        let origin = scopes.iter().map(|(_, s)| s.start).min();
        for (scope, series) in &scopes {
            let normalized = normalize_max(series).map_err(|e| Abort(e.to_string()))?;
            for (i, (v, n)) in series.values.iter().zip(&normalized.values).enumerate() {
                table.row([
                    series.date_at(i).format("%Y-%m").to_string(),
                    scope.to_string(),
                    format!("{v}"),
                    num(*n, 6),
                ]);
            }
            lines.push(month_line(scope.to_string(), &normalized, origin));
        }
        self.writer.write_csv("activity.csv", &table).map_err(io_abort)?;
        let ticks = year_ticks(origin, &scopes.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>());
        lines.truncate(11);
        self.writer
            .write_text(
                "activity.svg",
                &line_chart("Monthly posts (normalized by max)", &lines, &ticks, &[]),
            )
            .map_err(io_abort)?;
        Ok(())
    }

    fn activity_tables(&mut self) -> Result<(ActivityTable, ActivityTable), Abort> {
        let posts = self.windowed_posts()?;
        let corpus = monthly_activity(&posts, GroupBy::Corpus);
        let subs = monthly_activity(&posts, GroupBy::Subreddit);
        Ok((corpus, subs))
    }

    fn users(&mut self) -> Step {
        let (corpus, subs) = self.activity_tables()?;
        let selected: BTreeSet<Scope> = self.selected_subreddits(&subs).into_iter().collect();
        let mut table = CsvTable::new([
            "month",
            "scope",
            "posts",
            "active_users",
            "new_users",
            "overlap_prev_month",
        ]);
        let rows: Vec<_> = corpus
            .rows()
            .into_iter()
            .chain(subs.rows().into_iter().filter(|r| selected.contains(&r.scope)))
            .collect();
        for r in &rows {
            table.row([
                r.month.format("%Y-%m").to_string(),
                r.scope.to_string(),
                r.posts.to_string(),
                r.active_users.to_string(),
                r.new_users.to_string(),
                r.overlap_prev_month.map_or_else(String::new, |o| num(o, 6)),
            ]);
        }
        self.writer.write_csv("users.csv", &table).map_err(io_abort)?;

        let origin = rows.iter().map(|r| r.month).min();
        let mut lines = Vec::new();
        for (label, pick) in [("active users", 0usize), ("new users", 1)] {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.scope == Scope::Corpus)
                .map(|r| {
                    let x = month_index(origin, r.month);
                    let y = if pick == 0 { r.active_users } else { r.new_users };
                    (x, y as f64)
                })
                .collect();
            lines.push(LineSeries { label: label.into(), points });
        }
        let ticks = month_ticks(origin, rows.iter().map(|r| r.month));
        self.writer
            .write_text("users.svg", &line_chart("Monthly users (all subreddits)", &lines, &ticks, &[]))
            .map_err(io_abort)?;
        Ok(())
    }

    fn retention(&mut self) -> Step {
        let (corpus, subs) = self.activity_tables()?;
        let selected: BTreeSet<Scope> = self.selected_subreddits(&subs).into_iter().collect();
        let mut table = CsvTable::new(["month", "scope", "prev_active", "active", "overlap"]);
        let mut curves: Vec<(String, Vec<(NaiveDate, f64)>)> = Vec::new();
        let mut all_months = Vec::new();
        for table_src in [&corpus, &subs] {
            for (scope, months) in &table_src.scopes {
                if *scope != Scope::Corpus && !selected.contains(scope) {
                    continue;
                }
                let rows: Vec<_> = table_src
                    .rows()
                    .into_iter()
                    .filter(|r| r.scope == *scope)
                    .collect();
                let mut points = Vec::new();
                for r in rows {
                    let Some(overlap) = r.overlap_prev_month else { continue };
                    let prev = r.month - chrono::Months::new(1);
                    let prev_active = months.get(&prev).map_or(0, |c| c.active_users.len());
                    table.row([
                        r.month.format("%Y-%m").to_string(),
                        scope.to_string(),
                        prev_active.to_string(),
                        r.active_users.to_string(),
                        num(overlap, 6),
                    ]);
                    points.push((r.month, overlap));
                    all_months.push(r.month);
                }
                curves.push((scope.to_string(), points));
            }
        }
        let origin = all_months.iter().min().copied();
        let mut lines: Vec<LineSeries> = curves
            .into_iter()
            .map(|(label, points)| LineSeries {
                label,
                points: points.into_iter().map(|(m, o)| (month_index(origin, m), o)).collect(),
            })
            .collect();
        lines.truncate(11);
        self.writer.write_csv("retention.csv", &table).map_err(io_abort)?;
        let ticks = month_ticks(origin, all_months.iter().copied());
        self.writer
            .write_text(
                "retention.svg",
                &line_chart("Overlap of active users with previous month", &lines, &ticks, &[]),
            )
            .map_err(io_abort)?;
        Ok(())
    }

    fn changepoints(&mut self) -> Step {
        let posts = self.windowed_posts()?;
        let cp = self.cfg.changepoints.clone();
        let mut scopes: Vec<(String, Series)> = Vec::new();
        if let Some(s) = count_series("all", posts.iter().map(PostRecord::day), cp.granularity) {
            scopes.push(("all".into(), s));
        }
        for sub in &self.cfg.filters.subreddits {
            let days = posts.iter().filter(|p| p.subreddit == *sub).map(PostRecord::day);
            match count_series(sub.clone(), days, cp.granularity) {
                Some(s) => scopes.push((format!("r/{sub}"), s)),
                None => self.warnings.push(format!("changepoints: no posts in r/{sub}")),
            }
        }

        let detector = Pelt {
            min_segment_length: cp.min_segment_length,
            ..Pelt::default()
        };
        let mut points = CsvTable::new(["scope", "index", "date"]);
        let mut summary = CsvTable::new(["scope", "granularity", "points", "penalty", "breakpoints", "total_cost"]);
        let mut chart = None;
        for (scope, series) in &scopes {
            if series.len() < 2 {
                self.warnings
                    .push(format!("changepoints: {scope} has fewer than 2 buckets"));
                continue;
            }
            let input = if cp.zscore { z_score(series) } else { series.clone() };
            let penalty = cp.penalty.unwrap_or_else(|| default_penalty(series.len()));
            let result = match detector.detect(&input.values, penalty) {
                Ok(r) => r,
                Err(e) => {
                    self.errors.push(format!("changepoints {scope}: {e}"));
                    continue;
                }
            };
            for &b in &result.breakpoints {
                points.row([scope.clone(), b.to_string(), series.date_at(b).to_string()]);
            }
            summary.row([
                scope.clone(),
                format!("{:?}", cp.granularity).to_lowercase(),
                series.len().to_string(),
                num(penalty, 6),
                result.breakpoints.len().to_string(),
                num(result.total_cost, 6),
            ]);
            if chart.is_none() {
                chart = Some((series.clone(), result.breakpoints.clone()));
            }
        }
        self.writer.write_csv("changepoints.csv", &points).map_err(io_abort)?;
        self.writer
            .write_csv("changepoints_summary.csv", &summary)
            .map_err(io_abort)?;
        if let Some((series, breakpoints)) = chart {
            let normalized = normalize_max(&series).unwrap_or_else(|_| series.clone());
            let line = LineSeries {
                label: "all (normalized)".into(),
                points: normalized
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64, *v))
                    .collect(),
            };
            let markers: Vec<f64> = breakpoints.iter().map(|&b| b as f64 - 0.5).collect();
            let ticks = index_ticks(&series);
            self.writer
                .write_text(
                    "changepoints.svg",
                    &line_chart("Activity with detected changepoints", &[line], &ticks, &markers),
                )
                .map_err(io_abort)?;
        }
        Ok(())
    }

    fn compute_xcorr(&mut self) -> Result<(), Abort> {
        if self.xcorr.is_some() {
            return Ok(());
        }
        let correlator = CrossCorrelator {
            max_lag: self.cfg.xcorr.max_lag,
            min_overlap: self.cfg.xcorr.min_overlap,
        };
        let (from, to) = (self.cfg.filters.from, self.cfg.filters.to);
        self.coins()?;
        let coins = self.coins.as_deref().expect("loaded");
        let results: Vec<(String, Result<LagCorrelation, String>)> = self.pool.install(|| {
            coins
                .par_iter()
                .map(|coin| {
                    let name = coin.entry.canonical_name.clone();
                    let result = match (&coin.posts, &coin.price) {
                        (None, _) => Err("no posts".to_string()),
                        (_, None) => Err("no price file".to_string()),
                        (Some(posts), Some(price)) => {
                            match (posts.window(from, to), price.series.window(from, to)) {
                                (Some(p), Some(q)) => correlator.correlate(&p, &q).map_err(|e| e.to_string()),
                                _ => Err("no data inside the window".to_string()),
                            }
                        }
                    };
                    (name, result)
                })
                .collect()
        });
        self.xcorr = Some(results);
        Ok(())
    }

    fn xcorr_report(&mut self) -> Step {
        self.compute_xcorr()?;
        let results = self.xcorr.clone().expect("computed");
        let mut summary = CsvTable::new(["currency", "best_lag", "cc_score", "relation", "lags_evaluated", "status"]);
        for (name, result) in &results {
            let slug = crate::ingest::slug(name);
            match result {
                Ok(lc) => {
                    summary.row([
                        name.clone(),
                        lc.best_lag.to_string(),
                        num(lc.best_coefficient, 6),
                        interpret_lag(lc).to_string(),
                        lc.lags.len().to_string(),
                        "ok".into(),
                    ]);
                    let mut curve = CsvTable::new(["lag", "coefficient"]);
                    for (lag, c) in lc.lags.iter().zip(&lc.coefficients) {
                        curve.row([lag.to_string(), num(*c, 6)]);
                    }
                    self.writer
                        .write_csv(&format!("xcorr/{slug}.csv"), &curve)
                        .map_err(io_abort)?;
                    let line = LineSeries {
                        label: name.clone(),
                        points: lc
                            .lags
                            .iter()
                            .zip(&lc.coefficients)
                            .map(|(l, c)| (*l as f64, *c))
                            .collect(),
                    };
                    let ticks: Vec<(f64, String)> = lc
                        .lags
                        .iter()
                        .filter(|l| *l % 15 == 0)
                        .map(|l| (*l as f64, l.to_string()))
                        .collect();
                    self.writer
                        .write_text(
                            &format!("xcorr/{slug}.svg"),
                            &line_chart(
                                &format!("{name}: correlation of posts[t+lag] with price[t]"),
                                &[line],
                                &ticks,
                                &[lc.best_lag as f64],
                            ),
                        )
                        .map_err(io_abort)?;
                }
                Err(e) => {
                    summary.row([name.clone(), String::new(), String::new(), String::new(), "0".into(), e.clone()]);
                    if e == "no posts" || e == "no price file" {
                        self.warnings.push(format!("xcorr {name}: {e}"));
                    } else {
                        self.errors.push(format!("xcorr {name}: {e}"));
                    }
                }
            }
        }
        self.writer.write_csv("xcorr_summary.csv", &summary).map_err(io_abort)?;
        Ok(())
    }

    fn backtest(&mut self) -> Step {
        let b = self.cfg.backtest.clone();
        self.compute_xcorr()?;
        let xcorr: BTreeMap<String, Result<LagCorrelation, String>> =
            self.xcorr.clone().unwrap_or_default().into_iter().collect();

        struct Job<'a> {
            coin: &'a Coin,
            k: usize,
            lag: Option<i64>,
            cc: Option<f64>,
        }
        let coins = self.coins.as_deref().expect("loaded");
        let mut jobs = Vec::new();
        let mut warnings = Vec::new();
        let mut errors = Vec::new();
        for coin in coins {
            let name = &coin.entry.canonical_name;
            let lc = xcorr.get(name).and_then(|r| r.as_ref().ok());
            let (lag, cc) = (lc.map(|l| l.best_lag), lc.map(|l| l.best_coefficient));
            let k = match b.k_overrides.get(name).copied().or(b.k) {
                Some(k) => k,
                None => match xcorr.get(name) {
                    Some(Ok(lc)) => {
                        if b.require_nonpositive_lag && lc.best_lag > 0 {
                            warnings.push(format!("backtest {name}: not traded, best lag {} > 0", lc.best_lag));
                            continue;
                        }
                        if lc.best_coefficient <= b.min_cc {
                            warnings.push(format!(
                                "backtest {name}: not traded, cc {} <= {}",
                                num(lc.best_coefficient, 4),
                                b.min_cc
                            ));
                            continue;
                        }
                        lookback_from_lag(lc.best_lag)
                    }
                    Some(Err(e)) => {
                        warnings.push(format!("backtest {name}: no lookback ({e})"));
                        continue;
                    }
                    None => continue,
                },
            };
            if coin.posts.is_none() || coin.price.is_none() {
                warnings.push(format!("backtest {name}: missing posts or prices"));
                continue;
            }
            jobs.push(Job { coin, k, lag, cc });
        }

        let runs: Vec<(usize, Result<BacktestLedger, String>)> = self.pool.install(|| {
            jobs.par_iter()
                .enumerate()
                .map(|(i, job)| {
                    let cfg = StrategyConfig {
                        k: job.k,
                        fee_rate: b.fee_rate,
                        initial_cash: b.initial_cash,
                        start_date: b.start,
                        end_date: b.end,
                    };
                    let posts = job.coin.posts.as_ref().expect("checked");
                    let price = &job.coin.price.as_ref().expect("checked").series;
                    (i, run_backtest(posts, price, &cfg).map_err(|e| e.to_string()))
                })
                .collect()
        });

        let mut rows = Vec::new();
        for (i, run) in runs {
            let job = &jobs[i];
            match run {
                Ok(ledger) => rows.push((job.lag, job.cc, ledger)),
                Err(e) => errors.push(format!("backtest {}: {e}", job.coin.entry.canonical_name)),
            }
        }
        rows.sort_by(|a, b| {
            b.2.return_pct
                .total_cmp(&a.2.return_pct)
                .then_with(|| a.2.currency.cmp(&b.2.currency))
        });

        let mut report = CsvTable::new(["currency", "lag", "cc_score", "portfolio_value", "return_pct"]);
        if rows.iter().any(|r| r.2.k == 0) {
            report.note("k=0 rows trade on the same day's complete post count");
        }
        report.note(format!(
            "window={}..={} fee_rate={} initial_cash={}",
            b.start,
            b.end,
            b.fee_rate,
            num(b.initial_cash, 2)
        ));
        for (lag, cc, ledger) in &rows {
            report.row([
                ledger.currency.clone(),
                lag.map_or_else(String::new, |l| l.to_string()),
                cc.map_or_else(String::new, |c| num(c, 2)),
                num(ledger.final_value, 2),
                num(ledger.return_pct, 2),
            ]);
        }
        match portfolio_summary(rows.iter().map(|r| &r.2)) {
            Ok(total) => {
                report.row([
                    "Total".to_string(),
                    String::new(),
                    String::new(),
                    num(total.total_final, 2),
                    num(total.total_return_pct, 2),
                ]);
            }
            Err(_) => warnings.push("backtest: no coin was traded".into()),
        }
        self.warnings.extend(warnings);
        self.errors.extend(errors);
        self.writer.write_csv("backtest.csv", &report).map_err(io_abort)?;

        if b.write_ledgers {
            for (_, _, ledger) in &rows {
                let mut t = CsvTable::new(["date", "signal", "executed", "close", "cash", "quantity", "portfolio_value"]);
                t.note(format!("{} k={}", ledger.currency, ledger.k));
                for d in &ledger.days {
                    t.row([
                        d.date.to_string(),
                        d.signal.as_str().to_string(),
                        d.executed.to_string(),
                        format!("{}", d.close),
                        format!("{}", d.cash),
                        format!("{}", d.quantity),
                        format!("{}", d.portfolio_value),
                    ]);
                }
                let slug = crate::ingest::slug(&ledger.currency);
                self.writer
                    .write_csv(&format!("ledgers/{slug}.csv"), &t)
                    .map_err(io_abort)?;
            }
        }
        if !rows.is_empty() {
            let lines: Vec<LineSeries> = rows
                .iter()
                .take(10)
                .map(|(_, _, l)| LineSeries {
                    label: l.currency.clone(),
                    points: l
                        .days
                        .iter()
                        .enumerate()
                        .map(|(i, d)| (i as f64, d.portfolio_value / l.initial_cash))
                        .collect(),
                })
                .collect();
            let first = &rows[0].2;
            let ticks: Vec<(f64, String)> = first
                .days
                .iter()
                .enumerate()
                .filter(|(_, d)| chrono::Datelike::day(&d.date) == 1 && chrono::Datelike::month0(&d.date) % 3 == 0)
                .map(|(i, d)| (i as f64, d.date.format("%Y-%m").to_string()))
                .collect();
            self.writer
                .write_text(
                    "backtest.svg",
                    &line_chart("Portfolio value / initial cash", &lines, &ticks, &[]),
                )
                .map_err(io_abort)?;
        }
        Ok(())
    }

    fn emotions(&mut self) -> Step {
        let path = self
            .cfg
            .inputs
            .labels
            .clone()
            .ok_or_else(|| Abort("no label file configured".into()))?;
        let labels = LabelIndex::load(&path).map_err(|e| Abort(e.to_string()))?;
        let posts = self.windowed_posts()?;
        let (joined, coverage) = join_labels(&posts, &labels);
        let mode = self.cfg.emotions.mode;
        let events = self.cfg.events().map_err(|e| Abort(e.0))?;

        let coverage_note = format!(
            "joined={} unlabeled={} orphan_labels={} mode={}",
            coverage.joined,
            coverage.unlabeled,
            coverage.orphan_labels,
            mode.name()
        );
        let curve = weekly_curve(joined.iter().copied(), &CurveScope::Corpus, mode);
        let mut weekly = curve_table(&curve);
        weekly.note(coverage_note.clone());
        self.writer.write_csv("emotions_weekly.csv", &weekly).map_err(io_abort)?;
        self.writer
            .write_text("emotions_weekly.svg", &curve_chart("Weekly average emotion scores", &curve))
            .map_err(io_abort)?;
        for sub in self.cfg.filters.subreddits.clone() {
            let curve = weekly_curve(joined.iter().copied(), &CurveScope::Subreddit(sub.clone()), mode);
            let slug = crate::ingest::slug(&sub);
            self.writer
                .write_csv(&format!("emotions_weekly/{slug}.csv"), &curve_table(&curve))
                .map_err(io_abort)?;
        }

        let mut subs = CsvTable::new(["subreddit", "posts", "joy", "sadness", "anger", "fear", "surprise", "markers"]);
        for row in subreddit_summary(joined.iter().copied(), mode, self.cfg.emotions.top_subreddits) {
            let markers: Vec<String> = Emotion::REPORTED
                .iter()
                .zip(row.markers)
                .filter(|(_, m)| !m.symbol().is_empty())
                .map(|(e, m)| format!("{}:{}", e.name(), m.symbol()))
                .collect();
            let mut cells = vec![row.subreddit.clone(), row.posts.to_string()];
            cells.extend(row.means.iter().map(|v| num(*v, 6)));
            cells.push(markers.join(";"));
            subs.row(cells);
        }
        self.writer.write_csv("emotions_subreddits.csv", &subs).map_err(io_abort)?;

        let (radar, warnings) = event_radar(joined.iter().copied(), &events, mode);
        self.warnings.extend(warnings);
        let mut table = CsvTable::new(["event", "month", "posts", "joy", "sadness", "anger", "fear", "surprise"]);
        for row in &radar {
            let mut cells = vec![row.event.clone(), row.month.format("%Y-%m").to_string(), row.posts.to_string()];
            cells.extend(row.means.iter().map(|v| num(*v, 6)));
            table.row(cells);
        }
        self.writer.write_csv("emotions_events.csv", &table).map_err(io_abort)?;
        let axes: Vec<&str> = Emotion::REPORTED.iter().map(|e| e.name()).collect();
        let series: Vec<RadarSeries> = radar
            .iter()
            .map(|r| RadarSeries {
                label: format!("{} ({})", r.event, r.month.format("%Y-%m")),
                values: r.means.to_vec(),
            })
            .collect();
        self.writer
            .write_text("emotions_radar.svg", &radar_chart("Emotions in event months", &axes, &series))
            .map_err(io_abort)?;
        Ok(())
    }
}

fn curve_table(curve: &EmotionCurve) -> CsvTable {
    let mut t = CsvTable::new([
        "week", "week_start", "posts", "joy", "sadness", "anger", "fear", "surprise", "neutral",
    ]);
    for b in &curve.buckets {
        let mut cells = vec![b.period.to_string(), b.period.start().to_string(), b.post_count.to_string()];
        cells.extend(b.mean_scores.iter().map(|v| num(*v, 6)));
        t.row(cells);
    }
    t
}

fn curve_chart(title: &str, curve: &EmotionCurve) -> String {
    let origin = curve.buckets.first().map(|b| b.period.start());
    let lines: Vec<LineSeries> = Emotion::REPORTED
        .iter()
        .map(|e| LineSeries {
            label: e.name().into(),
            points: curve
                .buckets
                .iter()
                .map(|b| {
                    let x = origin.map_or(0.0, |o| (b.period.start() - o).num_days() as f64 / 7.0);
                    (x, b.mean_scores[e.index()])
                })
                .collect(),
        })
        .collect();
    let ticks: Vec<(f64, String)> = curve
        .buckets
        .iter()
        .filter(|b| {
            let d = b.period.start();
            chrono::Datelike::day(&d) <= 7 && chrono::Datelike::month0(&d) % 3 == 0
        })
        .map(|b| {
            let x = origin.map_or(0.0, |o| (b.period.start() - o).num_days() as f64 / 7.0);
            (x, b.period.start().format("%Y-%m").to_string())
        })
        .collect();
    line_chart(title, &lines, &ticks, &[])
}

fn month_index(origin: Option<NaiveDate>, month: NaiveDate) -> f64 {
    origin.map_or(0.0, |o| Granularity::Month.distance(o, month) as f64)
}

fn month_line(label: String, series: &Series, origin: Option<NaiveDate>) -> LineSeries {
    let offset = month_index(origin, series.start);
    LineSeries {
        label,
        points: series
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (offset + i as f64, *v))
            .collect(),
    }
}

fn year_ticks(origin: Option<NaiveDate>, series: &[Series]) -> Vec<(f64, String)> {
    let months = series.iter().flat_map(|s| s.dates().collect::<Vec<_>>());
    month_ticks(origin, months)
}

/// January ticks, or every month when the span is under a year.
fn month_ticks(origin: Option<NaiveDate>, months: impl Iterator<Item = NaiveDate>) -> Vec<(f64, String)> {
    let all: BTreeSet<NaiveDate> = months.collect();
    let january_only = all.len() > 12;
    all.into_iter()
        .filter(|m| !january_only || chrono::Datelike::month(m) == 1)
        .map(|m| (month_index(origin, m), m.format("%Y-%m").to_string()))
        .collect()
}

fn index_ticks(series: &Series) -> Vec<(f64, String)> {
    let step = (series.len() / 8).max(1);
    (0..series.len())
        .step_by(step)
        .map(|i| (i as f64, series.date_at(i).to_string()))
        .collect()
}

impl From<ConfigError> for Abort {
    fn from(e: ConfigError) -> Self {
        Abort(e.0)
    }
}
