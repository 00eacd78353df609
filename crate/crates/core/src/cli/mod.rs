//! Command-line entry point: flag parsing, config merging, exit codes.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};
pub use pipeline::{Outcome, Pipeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse archives and report parse, spam, and mention counts.
    Ingest,
    /// Monthly post volume per scope, raw and max-normalized.
    Activity,
    /// Monthly posts, active users, new users, and retention overlap.
    Users,
    /// Month-over-month overlap of active users.
    Retention,
    /// Changepoints in the activity series.
    Changepoints,
    /// Lead-lag correlation between daily mentions and price, per coin.
    Xcorr,
    /// Post-trend trading simulation per coin, with a portfolio total.
    Backtest,
    /// Weekly emotion curves, subreddit table, and event radar.
    Emotions,
    /// Every analysis above.
    ReportAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Activity => "activity",
            Command::Users => "users",
            Command::Retention => "retention",
            Command::Changepoints => "changepoints",
            Command::Xcorr => "xcorr",
            Command::Backtest => "backtest",
            Command::Emotions => "emotions",
            Command::ReportAll => "report-all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coinpulse", version, about = "Crypto community activity, lead-lag, emotion, and backtest reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated canonical coin names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub coins: Vec<String>,
    /// Comma-separated subreddit names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub subreddits: Vec<String>,
    /// Window start (YYYY-MM-DD); also the backtest start.
    #[arg(long, global = true)]
    pub from: Option<NaiveDate>,
    /// Window end (YYYY-MM-DD); also the backtest end.
    #[arg(long, global = true)]
    pub to: Option<NaiveDate>,
    /// Largest lag in days for lead-lag correlation.
    #[arg(long = "max-lag", global = true)]
    pub max_lag: Option<usize>,
    /// Changepoint penalty.
    #[arg(long, global = true)]
    pub penalty: Option<f64>,
    /// Backtest fee rate, e.g. 0.001.
    #[arg(long, global = true)]
    pub fee: Option<f64>,
    /// Backtest lookback for every coin.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Cli {
    /// Loads the config file and applies flag overrides.
    pub fn effective_config(&self) -> Result<RunConfig, ConfigError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| ConfigError("--config is required".into()))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if !self.coins.is_empty() {
            cfg.filters.coins = self.coins.clone();
        }
        if !self.subreddits.is_empty() {
            cfg.filters.subreddits = self.subreddits.clone();
        }
        if let Some(from) = self.from {
            cfg.filters.from = Some(from);
            cfg.backtest.start = from;
        }
        if let Some(to) = self.to {
            cfg.filters.to = Some(to);
            cfg.backtest.end = to;
        }
        if let Some(v) = self.max_lag {
            cfg.xcorr.max_lag = v;
        }
        if let Some(v) = self.penalty {
            cfg.changepoints.penalty = Some(v);
        }
        if let Some(v) = self.fee {
            cfg.backtest.fee_rate = v;
        }
        if let Some(v) = self.k {
            cfg.backtest.k = Some(v);
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const EXIT_ANALYSIS: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Runs one command end to end and maps the outcome to an exit code:
/// 0 success, 1 analysis failure (partial artifacts kept), 2 config error.
pub fn run(cli: &Cli) -> ExitCode {
    let cfg = match cli.effective_config() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut pipeline = match Pipeline::new(cfg) {
        Ok(p) => p,
        Err(Outcome::ConfigError(e)) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(other) => {
            eprintln!("{other}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    match pipeline.execute(cli.command) {
        Outcome::Ok => {
            for w in pipeline.warnings() {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Outcome::ConfigError(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Outcome::AnalysisFailed(errors) => {
            for w in pipeline.warnings() {
                eprintln!("warning: {w}");
            }
            for e in errors {
                eprintln!("error: {e}");
            }
            ExitCode::from(EXIT_ANALYSIS)
        }
    }
}
