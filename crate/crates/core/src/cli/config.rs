//! Run configuration: a TOML file whose values any CLI flag can override.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::{DEFAULT_FEE_RATE, DEFAULT_INITIAL_CASH};
use crate::corpus_stats::{DEFAULT_POST_THRESHOLD, DEFAULT_USER_THRESHOLD};
use crate::emotion::{default_events, AverageMode, MarketEvent};
use crate::ingest::ArchiveDialect;
use crate::signal::{Granularity, DEFAULT_MAX_LAG, DEFAULT_MIN_OVERLAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub filters: Filters,
    pub spam: SpamSection,
    pub mentions: MentionSection,
    pub changepoints: ChangepointSection,
    pub xcorr: XcorrSection,
    pub backtest: BacktestSection,
    pub emotions: EmotionSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Archive shards, parsed independently and merged.
    pub corpus: Vec<PathBuf>,
    pub dialect: ArchiveDialect,
    /// Directory of `<coin-slug>.csv` price files.
    pub prices: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Filters {
    /// Canonical coin names; empty means every registry entry.
    pub coins: Vec<String>,
    /// Subreddits for per-subreddit outputs; empty means all.
    pub subreddits: Vec<String>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpamSection {
    pub enabled: bool,
    pub post_threshold: f64,
    pub user_threshold: f64,
}

impl Default for SpamSection {
    fn default() -> Self {
        Self {
            enabled: true,
            post_threshold: DEFAULT_POST_THRESHOLD,
            user_threshold: DEFAULT_USER_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MentionSection {
    pub plural_suffix: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChangepointSection {
    pub granularity: Granularity,
    /// Fixed penalty; `3 ln n` when absent.
    pub penalty: Option<f64>,
    pub zscore: bool,
    pub min_segment_length: usize,
}

impl Default for ChangepointSection {
    fn default() -> Self {
        Self {
            granularity: Granularity::Month,
            penalty: None,
            zscore: true,
            min_segment_length: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XcorrSection {
    pub max_lag: usize,
    pub min_overlap: usize,
}

impl Default for XcorrSection {
    fn default() -> Self {
        Self {
            max_lag: DEFAULT_MAX_LAG,
            min_overlap: DEFAULT_MIN_OVERLAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub fee_rate: f64,
    pub initial_cash: f64,
    /// Lookback for every coin, bypassing the correlation-derived value.
    pub k: Option<usize>,
    pub k_overrides: BTreeMap<String, usize>,
    /// Coins whose lookback comes from correlation are traded only when the
    /// best coefficient exceeds this.
    pub min_cc: f64,
    pub require_nonpositive_lag: bool,
    pub write_ledgers: bool,
}

impl Default for BacktestSection {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid"),
            end: NaiveDate::from_ymd_opt(2022, 8, 21).expect("valid"),
            fee_rate: DEFAULT_FEE_RATE,
            initial_cash: DEFAULT_INITIAL_CASH,
            k: None,
            k_overrides: BTreeMap::new(),
            min_cc: 0.5,
            require_nonpositive_lag: true,
            write_ledgers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub name: String,
    /// `YYYY-MM`.
    pub month: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmotionSection {
    pub mode: AverageMode,
    pub top_subreddits: Option<usize>,
    pub events: Vec<EventSpec>,
}

impl Default for EmotionSection {
    fn default() -> Self {
        Self {
            mode: AverageMode::ProbabilityMean,
            top_subreddits: Some(15),
            events: default_events()
                .into_iter()
                .map(|e| EventSpec {
                    name: e.name,
                    month: e.month.format("%Y-%m").to_string(),
                })
                .collect(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Inputs::default(),
            output: None,
            threads: None,
            filters: Filters::default(),
            spam: SpamSection::default(),
            mentions: MentionSection::default(),
            changepoints: ChangepointSection::default(),
            xcorr: XcorrSection::default(),
            backtest: BacktestSection::default(),
            emotions: EmotionSection::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn parse_month(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(&format!("{text}-01"), "%Y-%m-%d").ok()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads a config file; relative input and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.corpus.iter_mut().for_each(fix);
        for p in [
            &mut self.inputs.prices,
            &mut self.inputs.registry,
            &mut self.inputs.labels,
            &mut self.output,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn events(&self) -> Result<Vec<MarketEvent>, ConfigError> {
        self.emotions
            .events
            .iter()
            .map(|e| {
                parse_month(&e.month)
                    .map(|month| MarketEvent {
                        name: e.name.clone(),
                        month,
                    })
                    .ok_or_else(|| ConfigError(format!("event {:?}: bad month {:?}", e.name, e.month)))
            })
            .collect()
    }

    /// Range and existence checks. Path checks cover every configured input.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.inputs.corpus.is_empty() {
            return fail("inputs.corpus: at least one archive is required".into());
        }
        for p in &self.inputs.corpus {
            if !p.is_file() {
                return fail(format!("inputs.corpus: {} does not exist", p.display()));
            }
        }
        if let Some(p) = &self.inputs.prices {
            if !p.is_dir() {
                return fail(format!("inputs.prices: {} is not a directory", p.display()));
            }
        }
        for (key, p) in [("inputs.registry", &self.inputs.registry), ("inputs.labels", &self.inputs.labels)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return fail(format!("{key}: {} does not exist", p.display()));
                }
            }
        }
        if self.output.is_none() {
            return fail("output directory not set (config `output` or --out)".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        if let (Some(from), Some(to)) = (self.filters.from, self.filters.to) {
            if from > to {
                return fail(format!("filters: from {from} after to {to}"));
            }
        }
        let s = &self.spam;
        if !(0.0..=1.0).contains(&s.post_threshold) {
            return fail(format!("spam.post_threshold {} outside [0, 1]", s.post_threshold));
        }
        if !(s.user_threshold > 0.0 && s.user_threshold <= 1.0) {
            return fail(format!("spam.user_threshold {} outside (0, 1]", s.user_threshold));
        }
        if let Some(p) = self.changepoints.penalty {
            if !(p > 0.0) {
                return fail(format!("changepoints.penalty {p} must be positive"));
            }
        }
        if self.changepoints.min_segment_length == 0 {
            return fail("changepoints.min_segment_length must be at least 1".into());
        }
        if self.xcorr.min_overlap < 2 {
            return fail("xcorr.min_overlap must be at least 2".into());
        }
        let b = &self.backtest;
        if b.start >= b.end {
            return fail(format!("backtest: start {} not before end {}", b.start, b.end));
        }
        if !(0.0..1.0).contains(&b.fee_rate) {
            return fail(format!("backtest.fee_rate {} outside [0, 1)", b.fee_rate));
        }
        if !(b.initial_cash > 0.0) || !b.initial_cash.is_finite() {
            return fail(format!("backtest.initial_cash {} must be positive", b.initial_cash));
        }
        if let Some(top) = self.emotions.top_subreddits {
            if top == 0 {
                return fail("emotions.top_subreddits must be at least 1".into());
            }
        }
        self.events()?;
        Ok(())
    }

    /// Short hash of everything that can change an artifact. The output
    /// location and thread count are excluded.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        canonical.threads = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
