//! Lagged Pearson cross-correlation between a post-count series and a price
//! series aligned on calendar dates.
//!
//! The coefficient at lag `ℓ` correlates `posts[t + ℓ]` with `price[t]`. A
//! negative best lag therefore means post activity leads the price.

use serde::Serialize;

use super::{Series, SignalError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCorrelation {
    /// Evaluated lags in ascending order. Lags with too little overlap or a
    /// zero-variance window are left out.
    pub lags: Vec<i64>,
    pub coefficients: Vec<f64>,
    pub best_lag: i64,
    pub best_coefficient: f64,
}

impl LagCorrelation {
    pub fn coefficient_at(&self, lag: i64) -> Option<f64> {
        self.lags
            .binary_search(&lag)
            .ok()
            .map(|i| self.coefficients[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "relation", content = "days", rename_all = "snake_case")]
pub enum LeadLag {
    PostsLead(u64),
    PriceLeads(u64),
    Simultaneous,
}

impl std::fmt::Display for LeadLag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeadLag::PostsLead(d) => write!(f, "posts lead by {d}d"),
            LeadLag::PriceLeads(d) => write!(f, "price leads by {d}d"),
            LeadLag::Simultaneous => f.write_str("simultaneous"),
        }
    }
}

pub fn interpret_lag(lc: &LagCorrelation) -> LeadLag {
    match lc.best_lag {
        0 => LeadLag::Simultaneous,
        l if l < 0 => LeadLag::PostsLead(l.unsigned_abs()),
        l => LeadLag::PriceLeads(l as u64),
    }
}

pub const DEFAULT_MAX_LAG: usize = 90;
pub const DEFAULT_MIN_OVERLAP: usize = 30;

#[derive(Debug, Clone, Copy)]
pub struct CrossCorrelator {
    pub max_lag: usize,
    pub min_overlap: usize,
}

impl Default for CrossCorrelator {
    fn default() -> Self {
        Self {
            max_lag: DEFAULT_MAX_LAG,
            min_overlap: DEFAULT_MIN_OVERLAP,
        }
    }
}

/// Pearson correlation of two equal-length samples; `None` when either side
/// has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.is_empty() {
        return None;
    }
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// True when `candidate` should replace `best`: higher coefficient, then
/// smaller |lag|, then the negative lag.
fn beats(candidate: (i64, f64), best: (i64, f64)) -> bool {
    let (lag, c) = candidate;
    let (best_lag, best_c) = best;
    if c != best_c {
        return c > best_c;
    }
    if lag.abs() != best_lag.abs() {
        return lag.abs() < best_lag.abs();
    }
    lag < best_lag
}

impl CrossCorrelator {
    pub fn correlate(&self, posts: &Series, price: &Series) -> Result<LagCorrelation, SignalError> {
        if posts.granularity != price.granularity {
            return Err(SignalError::GranularityMismatch);
        }
        // Offsets on the price grid: posts[j] sits at price index j + shift.
        let shift = price.offset_of(posts.start);
        let max_lag = self.max_lag as i64;
        let mut lags = Vec::new();
        let mut coefficients = Vec::new();
        let mut best: Option<(i64, f64)> = None;

        for lag in -max_lag..=max_lag {
            // price index t pairs with posts index t + lag - shift
            let lo = 0.max(shift - lag);
            let hi = (price.len() as i64).min(posts.len() as i64 + shift - lag);
            if hi - lo < self.min_overlap.max(2) as i64 {
                continue;
            }
            let (lo, hi) = (lo as usize, hi as usize);
            let p_lo = (lo as i64 + lag - shift) as usize;
            let x = &posts.values[p_lo..p_lo + (hi - lo)];
            let y = &price.values[lo..hi];
            let Some(c) = pearson(x, y) else { continue };
            lags.push(lag);
            coefficients.push(c);
            if best.is_none_or(|b| beats((lag, c), b)) {
                best = Some((lag, c));
            }
        }

        let (best_lag, best_coefficient) = best.ok_or_else(|| {
            SignalError::DegenerateSeries(format!(
                "{} vs {}: no lag with sufficient overlap and non-zero variance",
                posts.label, price.label
            ))
        })?;
        Ok(LagCorrelation {
            lags,
            coefficients,
            best_lag,
            best_coefficient,
        })
    }
}

pub fn cross_correlate(posts: &Series, price: &Series, max_lag: usize) -> Result<LagCorrelation, SignalError> {
    CrossCorrelator {
        max_lag,
        ..CrossCorrelator::default()
    }
    .correlate(posts, price)
}
