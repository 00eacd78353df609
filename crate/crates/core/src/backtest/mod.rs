//! Post-trend trading simulation.
//!
//! Each day the strategy compares the post count `k` days ago with the day
//! before that: a rise buys with all available cash, a fall sells the whole
//! holding, and no change holds. Orders fill at the daily close with a
//! proportional fee on both sides.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Granularity, Series};

pub const DEFAULT_FEE_RATE: f64 = 0.001;
pub const DEFAULT_INITIAL_CASH: f64 = 1_000_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum BacktestError {
    #[error("no post history for the signal on {0}")]
    NoSignal(NaiveDate),
    #[error("{currency}: no price bar on {date}")]
    MissingBar { currency: String, date: NaiveDate },
    #[error("{series}: post history does not cover {from}..={to} needed for k = {k}")]
    InsufficientHistory {
        series: String,
        k: usize,
        from: NaiveDate,
        to: NaiveDate,
    },
    #[error("empty portfolio")]
    EmptyPortfolio,
    #[error("invalid strategy config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Buy,
    Sell,
    Hold,
}

impl Signal {
    pub fn as_str(self) -> &'static str {
        match self {
            Signal::Buy => "buy",
            Signal::Sell => "sell",
            Signal::Hold => "hold",
        }
    }
}

/// Trading signal for `date` from the post trend `k` days earlier:
/// `posts[date - k]` against `posts[date - k - 1]`.
pub fn signal_for_day(posts: &Series, date: NaiveDate, k: usize) -> Result<Signal, BacktestError> {
    let today = date
        .checked_sub_days(Days::new(k as u64))
        .ok_or(BacktestError::NoSignal(date))?;
    let yesterday = today.pred_opt().ok_or(BacktestError::NoSignal(date))?;
    match (posts.value_on(yesterday), posts.value_on(today)) {
        (Some(prev), Some(cur)) if cur > prev => Ok(Signal::Buy),
        (Some(prev), Some(cur)) if cur < prev => Ok(Signal::Sell),
        (Some(_), Some(_)) => Ok(Signal::Hold),
        _ => Err(BacktestError::NoSignal(date)),
    }
}

/// Maps a cross-correlation best lag to the signal lookback. Only post-led
/// (negative) lags give a lookback; zero or positive lags trade on the same
/// day's trend.
pub fn lookback_from_lag(best_lag: i64) -> usize {
    usize::try_from(-best_lag).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub k: usize,
    pub fee_rate: f64,
    pub initial_cash: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl StrategyConfig {
    pub fn new(k: usize, start_date: NaiveDate, end_date: NaiveDate) -> Self {
        Self {
            k,
            fee_rate: DEFAULT_FEE_RATE,
            initial_cash: DEFAULT_INITIAL_CASH,
            start_date,
            end_date,
        }
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        let invalid = |m: String| Err(BacktestError::InvalidConfig(m));
        if self.start_date >= self.end_date {
            return invalid(format!("start {} not before end {}", self.start_date, self.end_date));
        }
        if !(0.0..1.0).contains(&self.fee_rate) {
            return invalid(format!("fee_rate {} outside [0, 1)", self.fee_rate));
        }
        if !(self.initial_cash > 0.0) || !self.initial_cash.is_finite() {
            return invalid(format!("initial_cash {} must be positive", self.initial_cash));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerDay {
    pub date: NaiveDate,
    pub signal: Signal,
    /// False for holds, buys without cash, and sells without holdings.
    pub executed: bool,
    pub close: f64,
    pub cash: f64,
    pub quantity: f64,
    pub portfolio_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestLedger {
    pub currency: String,
    pub k: usize,
    pub initial_cash: f64,
    pub days: Vec<LedgerDay>,
    /// Cash plus holdings marked at the last close, without a closing fee.
    pub final_value: f64,
    pub return_pct: f64,
}

impl BacktestLedger {
    pub fn trades(&self) -> usize {
        self.days.iter().filter(|d| d.executed).count()
    }
}

pub fn return_pct(final_value: f64, initial_cash: f64) -> f64 {
    (final_value - initial_cash) / initial_cash * 100.0
}

fn check_daily(series: &Series) -> Result<(), BacktestError> {
    if series.granularity != Granularity::Day {
        return Err(BacktestError::InvalidConfig(format!(
            "{} is not a daily series",
            series.label
        )));
    }
    Ok(())
}

pub fn run_backtest(
    posts: &Series,
    price: &Series,
    cfg: &StrategyConfig,
) -> Result<BacktestLedger, BacktestError> {
    cfg.validate()?;
    check_daily(posts)?;
    check_daily(price)?;

    for date in [cfg.start_date, cfg.end_date] {
        if price.index_of(date).is_none() {
            return Err(BacktestError::MissingBar {
                currency: price.label.clone(),
                date,
            });
        }
    }
    let lookback = Days::new(cfg.k as u64 + 1);
    let history_from = cfg.start_date.checked_sub_days(lookback);
    let history_to = cfg.end_date.checked_sub_days(Days::new(cfg.k as u64));
    let covered = |d: Option<NaiveDate>| d.and_then(|d| posts.index_of(d)).is_some();
    if !covered(history_from) || !covered(history_to) {
        return Err(BacktestError::InsufficientHistory {
            series: posts.label.clone(),
            k: cfg.k,
            from: history_from.unwrap_or(NaiveDate::MIN),
            to: history_to.unwrap_or(NaiveDate::MIN),
        });
    }

    let first = price.index_of(cfg.start_date).expect("checked above");
    let last = price.index_of(cfg.end_date).expect("checked above");
    let keep = 1.0 - cfg.fee_rate;
    let mut cash = cfg.initial_cash;
    let mut quantity = 0.0;
    let mut days = Vec::with_capacity(last - first + 1);

    for i in first..=last {
        let date = price.date_at(i);
        let close = price.values[i];
        let signal = signal_for_day(posts, date, cfg.k)?;
        let executed = match signal {
            Signal::Buy if cash > 0.0 => {
                quantity += cash * keep / close;
                cash = 0.0;
                true
            }
            Signal::Sell if quantity > 0.0 => {
                cash += quantity * close * keep;
                quantity = 0.0;
                true
            }
            _ => false,
        };
        days.push(LedgerDay {
            date,
            signal,
            executed,
            close,
            cash,
            quantity,
            portfolio_value: cash + quantity * close,
        });
    }

    let final_value = days.last().map_or(cfg.initial_cash, |d| d.portfolio_value);
    Ok(BacktestLedger {
        currency: price.label.clone(),
        k: cfg.k,
        initial_cash: cfg.initial_cash,
        days,
        final_value,
        return_pct: return_pct(final_value, cfg.initial_cash),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortfolioSummary {
    pub total_initial: f64,
    pub total_final: f64,
    pub total_return_pct: f64,
}

/// Sums final values and stakes across independent per-currency runs.
pub fn portfolio_summary<'a>(
    ledgers: impl IntoIterator<Item = &'a BacktestLedger>,
) -> Result<PortfolioSummary, BacktestError> {
    summarize(ledgers.into_iter().map(|l| (l.final_value, l.initial_cash)))
}

/// Same as [`portfolio_summary`] over bare `(final_value, initial_cash)` pairs.
pub fn summarize(
    outcomes: impl IntoIterator<Item = (f64, f64)>,
) -> Result<PortfolioSummary, BacktestError> {
    let mut count = 0usize;
    let (mut total_final, mut total_initial) = (0.0, 0.0);
    for (final_value, initial) in outcomes {
        total_final += final_value;
        total_initial += initial;
        count += 1;
    }
    if count == 0 {
        return Err(BacktestError::EmptyPortfolio);
    }
    Ok(PortfolioSummary {
        total_initial,
        total_final,
        total_return_pct: return_pct(total_final, total_initial),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + Days::new(n)
    }

    fn series(label: &str, values: &[f64]) -> Series {
        Series::daily(label, day(0), values.to_vec())
    }

    #[test]
    fn signal_examples() {
        let posts = series("p", &[5.0, 7.0]);
        assert_eq!(signal_for_day(&posts, day(1), 0), Ok(Signal::Buy));

        let mut v = vec![0.0; 10];
        v[3] = 3.0;
        v[4] = 3.0;
        let posts = series("p", &v);
        // t = day 9, k = 5: compare day 4 with day 3
        assert_eq!(signal_for_day(&posts, day(9), 5), Ok(Signal::Hold));
        v[3] = 9.0;
        v[4] = 2.0;
        let posts = series("p", &v);
        assert_eq!(signal_for_day(&posts, day(9), 5), Ok(Signal::Sell));
        assert_eq!(signal_for_day(&posts, day(4), 5), Err(BacktestError::NoSignal(day(4))));
    }

    #[test]
    fn lag_to_lookback() {
        assert_eq!(lookback_from_lag(-11), 11);
        assert_eq!(lookback_from_lag(0), 0);
        assert_eq!(lookback_from_lag(1), 0);
    }

    #[test]
    fn increasing_posts_buy_once_and_hold() {
        let posts = series("p", &(0..12).map(f64::from).collect::<Vec<_>>());
        let prices: Vec<f64> = (0..12).map(|i| 100.0 + 3.0 * f64::from(i)).collect();
        let price = series("X", &prices);
        let cfg = StrategyConfig::new(0, day(1), day(11));
        let ledger = run_backtest(&posts, &price, &cfg).unwrap();
        assert_eq!(ledger.trades(), 1);
        assert!(ledger.days[0].executed);
        let expected = 1_000_000.0 * (1.0 - 0.001) * prices[11] / prices[1];
        assert!((ledger.final_value - expected).abs() < 1e-6);
    }

    #[test]
    fn constant_posts_hold_everything() {
        let posts = series("p", &[4.0; 10]);
        let price = series("X", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let cfg = StrategyConfig::new(2, day(3), day(9));
        let ledger = run_backtest(&posts, &price, &cfg).unwrap();
        assert_eq!(ledger.final_value, 1_000_000.0);
        assert_eq!(ledger.return_pct, 0.0);
        assert!(ledger.days.iter().all(|d| d.signal == Signal::Hold && !d.executed));
    }

    #[test]
    fn repeated_signals_do_not_compound() {
        let posts = series("p", &[1.0, 2.0, 3.0, 2.0, 1.0, 0.0]);
        let price = series("X", &[10.0; 6]);
        let cfg = StrategyConfig { fee_rate: 0.0, ..StrategyConfig::new(0, day(1), day(5)) };
        let ledger = run_backtest(&posts, &price, &cfg).unwrap();
        let executed: Vec<_> = ledger.days.iter().map(|d| d.executed).collect();
        assert_eq!(executed, [true, false, true, false, false]);
        assert_eq!(ledger.final_value, 1_000_000.0);
    }

    #[test]
    fn window_errors() {
        let posts = series("p", &[1.0; 10]);
        let price = series("X", &[1.0; 10]);
        let cfg = StrategyConfig::new(0, day(1), day(12));
        assert!(matches!(run_backtest(&posts, &price, &cfg), Err(BacktestError::MissingBar { .. })));
        let cfg = StrategyConfig::new(3, day(2), day(9));
        assert!(matches!(
            run_backtest(&posts, &price, &cfg),
            Err(BacktestError::InsufficientHistory { k: 3, .. })
        ));
        let cfg = StrategyConfig::new(0, day(5), day(5));
        assert!(matches!(run_backtest(&posts, &price, &cfg), Err(BacktestError::InvalidConfig(_))));
        let cfg = StrategyConfig { fee_rate: 1.0, ..StrategyConfig::new(0, day(1), day(5)) };
        assert!(matches!(run_backtest(&posts, &price, &cfg), Err(BacktestError::InvalidConfig(_))));
    }

    #[test]
    fn return_examples() {
        assert!((return_pct(31_916_439.0, 1e6) - 3091.64).abs() < 0.01);
        assert!((return_pct(17_983_091.0, 1e6) - 1698.31).abs() < 0.01);
        assert!((return_pct(110_514_693.0, 30e6) - 268.38).abs() < 0.01);
    }

    #[test]
    fn summary() {
        assert_eq!(summarize([(1e6, 1e6), (1e6, 1e6)]).unwrap().total_return_pct, 0.0);
        assert_eq!(summarize([(2e6, 1e6), (0.5e6, 1e6)]).unwrap().total_return_pct, 25.0);
        assert_eq!(summarize([]), Err(BacktestError::EmptyPortfolio));
    }
}
