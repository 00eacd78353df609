//! User-level longitudinal statistics.

mod activity;
mod agreement;
mod spam;

use std::collections::BTreeSet;

use thiserror::Error;

pub use activity::{
    monthly_activity, ActivityTable, ActivityTally, GroupBy, MonthlyCohort, MonthlyStatsRow, Scope,
};
pub use agreement::fleiss_kappa;
pub use spam::{
    build_profiles, filter_spam_users, is_spam_post, ProfileTally, SpamFilter, UserProfile,
    AUTOMODERATOR, DEFAULT_POST_THRESHOLD, DEFAULT_USER_THRESHOLD,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid ratings: {0}")]
    InvalidRatings(String),
    #[error("kappa undefined: expected agreement is 1")]
    UndefinedKappa,
}

/// Szymkiewicz–Simpson overlap `|a ∩ b| / min(|a|, |b|)`, zero when either
/// set is empty.
pub fn retention_overlap<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return 0.0;
    }
    let shared = small.iter().filter(|x| large.contains(x)).count();
    shared as f64 / small.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(retention_overlap(&set(&["x"]), &set(&["x", "y"])), 1.0);
        assert_eq!(retention_overlap(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(retention_overlap(&set(&["x", "y"]), &set(&["y", "z"])), 0.5);
        assert_eq!(retention_overlap(&set(&[]), &set(&["y"])), 0.0);
        assert_eq!(retention_overlap(&set(&[]), &set(&[])), 0.0);
    }
}
