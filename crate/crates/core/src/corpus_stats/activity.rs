//! Monthly posts, active users, new users, and month-over-month retention.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use super::retention_overlap;
use crate::ingest::PostRecord;
use crate::signal::month_start;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    #[default]
    Corpus,
    Subreddit,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Scope {
    Corpus,
    Subreddit(String),
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scope::Corpus => f.write_str("all"),
            Scope::Subreddit(s) => write!(f, "r/{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonthlyCohort {
    pub month: NaiveDate,
    pub active_users: BTreeSet<String>,
    pub new_users: BTreeSet<String>,
    pub post_count: u64,
}

#[derive(Debug, Clone, Default)]
struct ScopeTally {
    months: BTreeMap<NaiveDate, (u64, BTreeSet<String>)>,
    first_month: BTreeMap<String, NaiveDate>,
}

/// Mergeable per-scope, per-month tallies. A user is new in the month of
/// their first post within the scope.
#[derive(Debug, Clone, Default)]
pub struct ActivityTally {
    group_by: GroupBy,
    scopes: BTreeMap<Scope, ScopeTally>,
}

impl ActivityTally {
    pub fn new(group_by: GroupBy) -> Self {
        Self {
            group_by,
            scopes: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, post: &PostRecord) {
        let scope = match self.group_by {
            GroupBy::Corpus => Scope::Corpus,
            GroupBy::Subreddit => Scope::Subreddit(post.subreddit.clone()),
        };
        let month = month_start(post.day());
        let tally = self.scopes.entry(scope).or_default();
        let (count, users) = tally.months.entry(month).or_default();
        *count += 1;
        if !users.contains(&post.author) {
            users.insert(post.author.clone());
        }
        tally
            .first_month
            .entry(post.author.clone())
            .and_modify(|m| *m = (*m).min(month))
            .or_insert(month);
    }

    pub fn merge(&mut self, other: ActivityTally) {
        for (scope, theirs) in other.scopes {
            let ours = self.scopes.entry(scope).or_default();
            for (month, (count, users)) in theirs.months {
                let (c, u) = ours.months.entry(month).or_default();
                *c += count;
                u.extend(users);
            }
            for (author, month) in theirs.first_month {
                ours.first_month
                    .entry(author)
                    .and_modify(|m| *m = (*m).min(month))
                    .or_insert(month);
            }
        }
    }

    pub fn finish(self) -> ActivityTable {
        let scopes = self
            .scopes
            .into_iter()
            .map(|(scope, tally)| {
                let mut new_by_month: BTreeMap<NaiveDate, BTreeSet<String>> = BTreeMap::new();
                for (author, month) in tally.first_month {
                    new_by_month.entry(month).or_default().insert(author);
                }
                let months = tally
                    .months
                    .into_iter()
                    .map(|(month, (post_count, active_users))| {
                        let cohort = MonthlyCohort {
                            month,
                            new_users: new_by_month.remove(&month).unwrap_or_default(),
                            active_users,
                            post_count,
                        };
                        (month, cohort)
                    })
                    .collect();
                (scope, months)
            })
            .collect();
        ActivityTable { scopes }
    }
}

/// Finished cohorts keyed by scope and month (first day of the month).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivityTable {
    pub scopes: BTreeMap<Scope, BTreeMap<NaiveDate, MonthlyCohort>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlyStatsRow {
    pub month: NaiveDate,
    pub scope: Scope,
    pub posts: u64,
    pub active_users: usize,
    pub new_users: usize,
    /// Overlap with the previous calendar month's active users; `None` for
    /// the first month of a scope.
    pub overlap_prev_month: Option<f64>,
}

impl ActivityTable {
    pub fn is_empty(&self) -> bool {
        self.scopes.is_empty()
    }

    pub fn scope(&self, scope: &Scope) -> Option<&BTreeMap<NaiveDate, MonthlyCohort>> {
        self.scopes.get(scope)
    }

    /// Flat rows in scope, month order. Months without activity inside a
    /// scope's span are not emitted, but they still count as the empty
    /// previous month for the following row's overlap.
    pub fn rows(&self) -> Vec<MonthlyStatsRow> {
        let empty = BTreeSet::new();
        let mut rows = Vec::new();
        for (scope, months) in &self.scopes {
            let first = months.keys().next().copied();
            for (month, cohort) in months {
                let overlap = (Some(*month) != first).then(|| {
                    let prev = *month - Months::new(1);
                    let prev_users = months.get(&prev).map_or(&empty, |c| &c.active_users);
                    retention_overlap(prev_users, &cohort.active_users)
                });
                rows.push(MonthlyStatsRow {
                    month: *month,
                    scope: scope.clone(),
                    posts: cohort.post_count,
                    active_users: cohort.active_users.len(),
                    new_users: cohort.new_users.len(),
                    overlap_prev_month: overlap,
                });
            }
        }
        rows
    }
}

pub fn monthly_activity<'a>(
    posts: impl IntoIterator<Item = &'a PostRecord>,
    group_by: GroupBy,
) -> ActivityTable {
    let mut tally = ActivityTally::new(group_by);
    for post in posts {
        tally.add(post);
    }
    tally.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PostKind;

    fn post(author: &str, sub: &str, y: i32, m: u32, d: u32) -> PostRecord {
        let t = NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(12, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp();
        PostRecord {
            id: format!("{author}-{sub}-{t}"),
            author: author.into(),
            subreddit: sub.into(),
            kind: PostKind::Comment,
            created_utc: t,
            title: None,
            body: String::new(),
            spam_score: None,
        }
    }

    fn month(y: i32, m: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, 1).unwrap()
    }

    #[test]
    fn new_only_in_first_month() {
        let posts = [post("u", "s", 2021, 1, 5), post("u", "s", 2021, 2, 5)];
        let table = monthly_activity(&posts, GroupBy::Corpus);
        let months = table.scope(&Scope::Corpus).unwrap();
        assert_eq!(months[&month(2021, 1)].new_users.len(), 1);
        assert_eq!(months[&month(2021, 2)].new_users.len(), 0);
        assert_eq!(months[&month(2021, 2)].active_users.len(), 1);
    }

    #[test]
    fn empty_input() {
        assert!(monthly_activity(&[], GroupBy::Corpus).is_empty());
    }

    #[test]
    fn three_user_fixture_matches_hand_count() {
        let posts = [
            post("a", "btc", 2021, 1, 1),
            post("a", "btc", 2021, 1, 20),
            post("b", "eth", 2021, 1, 31),
            post("b", "btc", 2021, 2, 1),
            post("c", "eth", 2021, 3, 3),
            post("a", "eth", 2021, 3, 4),
        ];
        let rows = monthly_activity(&posts, GroupBy::Corpus).rows();
        let summary: Vec<_> = rows
            .iter()
            .map(|r| (r.month, r.posts, r.active_users, r.new_users))
            .collect();
        assert_eq!(
            summary,
            vec![
                (month(2021, 1), 3, 2, 2),
                (month(2021, 2), 1, 1, 0),
                (month(2021, 3), 2, 2, 1),
            ]
        );
        assert_eq!(rows[0].overlap_prev_month, None);
        // {a,b} vs {b}
        assert_eq!(rows[1].overlap_prev_month, Some(1.0));
        // {b} vs {a,c}
        assert_eq!(rows[2].overlap_prev_month, Some(0.0));

        // per subreddit, "a" is new to eth in March and "b" new to btc in February
        let by_sub = monthly_activity(&posts, GroupBy::Subreddit);
        let eth = by_sub.scope(&Scope::Subreddit("eth".into())).unwrap();
        assert_eq!(eth[&month(2021, 3)].new_users.len(), 2);
        let btc = by_sub.scope(&Scope::Subreddit("btc".into())).unwrap();
        assert_eq!(btc[&month(2021, 2)].new_users.len(), 1);
    }

    #[test]
    fn gap_month_counts_as_empty_previous() {
        let posts = [post("a", "s", 2021, 1, 1), post("a", "s", 2021, 3, 1)];
        let rows = monthly_activity(&posts, GroupBy::Corpus).rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].overlap_prev_month, Some(0.0));
    }

    #[test]
    fn merge_equals_single_pass() {
        let posts = [
            post("a", "btc", 2021, 1, 1),
            post("b", "eth", 2021, 1, 31),
            post("a", "eth", 2021, 2, 4),
            post("c", "btc", 2021, 2, 5),
        ];
        let whole = monthly_activity(&posts, GroupBy::Subreddit);
        let mut left = ActivityTally::new(GroupBy::Subreddit);
        let mut right = ActivityTally::new(GroupBy::Subreddit);
        for (i, p) in posts.iter().enumerate() {
            if i % 2 == 0 { left.add(p) } else { right.add(p) }
        }
        right.merge(left);
        assert_eq!(right.finish(), whole);
    }
}
