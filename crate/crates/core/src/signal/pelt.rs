//! Penalized changepoint detection with pruning (PELT).
//!
//! Minimizes `Σ segment cost + penalty · (number of changepoints)` exactly.
//! Pruning drops candidate segment starts that can no longer be optimal and
//! changes only the running time, never the minimizer.

use serde::{Deserialize, Serialize};

use super::{Series, SignalError};

/// Segment cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Sum of squared deviations from the segment mean.
    #[default]
    L2Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangepointResult {
    /// Start index of every segment after the first (equivalently the
    /// exclusive end of the preceding segment). Strictly increasing, all
    /// below the series length.
    pub breakpoints: Vec<usize>,
    pub penalty: f64,
    /// Segment costs plus `penalty` per breakpoint.
    pub total_cost: f64,
}

/// O(1) segment costs from prefix sums of the centered data.
pub struct L2Cost {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl L2Cost {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sum = Vec::with_capacity(values.len() + 1);
        let mut sum_sq = Vec::with_capacity(values.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        sum.push(s);
        sum_sq.push(q);
        for v in values {
            let c = v - mean;
            s += c;
            q += c * c;
            sum.push(s);
            sum_sq.push(q);
        }
        Self { sum, sum_sq }
    }

    /// Cost of the half-open segment `[start, end)`.
    pub fn segment(&self, start: usize, end: usize) -> f64 {
        let len = (end - start) as f64;
        let s = self.sum[end] - self.sum[start];
        let q = self.sum_sq[end] - self.sum_sq[start];
        (q - s * s / len).max(0.0)
    }

    /// Total cost of the segmentation implied by `breakpoints` over `n` points.
    pub fn segmentation(&self, breakpoints: &[usize], n: usize) -> f64 {
        let mut start = 0;
        let mut total = 0.0;
        for &end in breakpoints.iter().chain(std::iter::once(&n)) {
            total += self.segment(start, end);
            start = end;
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct Pelt {
    pub cost: CostModel,
    pub min_segment_length: usize,
}

impl Default for Pelt {
    fn default() -> Self {
        Self {
            cost: CostModel::L2Mean,
            min_segment_length: 2,
        }
    }
}

/// `3 · ln n`, the default penalty for a series of length `n`.
pub fn default_penalty(n: usize) -> f64 {
    3.0 * (n.max(2) as f64).ln()
}

struct Candidate {
    start: usize,
    pruned_at: Option<usize>,
}

impl Pelt {
    pub fn detect(&self, values: &[f64], penalty: f64) -> Result<ChangepointResult, SignalError> {
        if penalty.is_nan() || penalty <= 0.0 {
            return Err(SignalError::InvalidPenalty(penalty));
        }
        let n = values.len();
        if n < 2 {
            return Err(SignalError::TooShort { needed: 2, got: n });
        }
        let m = self.min_segment_length.max(1);
        let CostModel::L2Mean = self.cost;
        let cost = L2Cost::new(values);

        let breakpoints = if penalty.is_infinite() || n < 2 * m {
            Vec::new()
        } else {
            self.search(&cost, n, m, penalty)
        };
        let total_cost = cost.segmentation(&breakpoints, n)
            + if breakpoints.is_empty() {
                0.0
            } else {
                penalty * breakpoints.len() as f64
            };
        Ok(ChangepointResult {
            breakpoints,
            penalty,
            total_cost,
        })
    }

    fn search(&self, cost: &L2Cost, n: usize, m: usize, penalty: f64) -> Vec<usize> {
        // best[t]: optimal penalized cost of x[0..t]; prev[t]: start of its last segment
        let mut best = vec![f64::INFINITY; n + 1];
        let mut prev = vec![0usize; n + 1];
        best[0] = -penalty;
        let mut candidates: Vec<Candidate> = Vec::new();

        for t in m..=n {
            if best[t - m].is_finite() {
                candidates.push(Candidate {
                    start: t - m,
                    pruned_at: None,
                });
            }
            // A start pruned at time p is still needed for ends before p + m,
            // because the path through p is not admissible until then.
            candidates.retain(|c| c.pruned_at.is_none_or(|p| t < p + m));

            let mut best_t = f64::INFINITY;
            let mut arg = 0;
            for c in &candidates {
                let v = best[c.start] + cost.segment(c.start, t) + penalty;
                if v < best_t {
                    best_t = v;
                    arg = c.start;
                }
            }
            best[t] = best_t;
            prev[t] = arg;

            if best_t.is_finite() {
                for c in candidates.iter_mut().filter(|c| c.pruned_at.is_none()) {
                    if best[c.start] + cost.segment(c.start, t) > best_t {
                        c.pruned_at = Some(t);
                    }
                }
            }
        }

        let mut breakpoints = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = prev[end];
            if start > 0 {
                breakpoints.push(start);
            }
            end = start;
        }
        breakpoints.reverse();
        breakpoints
    }
}

/// Changepoints of `series` under `penalty` with the default minimum segment
/// length of 2.
pub fn pelt(series: &Series, penalty: f64, cost: CostModel) -> Result<ChangepointResult, SignalError> {
    Pelt {
        cost,
        ..Pelt::default()
    }
    .detect(&series.values, penalty)
}
