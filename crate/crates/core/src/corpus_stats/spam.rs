//! Spam-post flagging and spam-user exclusion.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::ingest::PostRecord;

pub const DEFAULT_POST_THRESHOLD: f64 = 0.9;
pub const DEFAULT_USER_THRESHOLD: f64 = 0.5;
/// Reddit's moderation bot, always excluded.
pub const AUTOMODERATOR: &str = "AutoModerator";

/// A post is spam when its score is strictly above `threshold`. Posts without
/// a score are never spam.
pub fn is_spam_post(post: &PostRecord, threshold: f64) -> bool {
    post.spam_score.is_some_and(|s| s > threshold)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserProfile {
    pub author: String,
    pub post_count: u64,
    pub spam_post_count: u64,
    pub first_post_utc: i64,
}

impl UserProfile {
    pub fn spam_share(&self) -> Option<f64> {
        (self.post_count > 0).then(|| self.spam_post_count as f64 / self.post_count as f64)
    }
}

/// Per-author tallies. Merging two tallies built from disjoint shards equals
/// the tally of their union.
#[derive(Debug, Clone, Default)]
pub struct ProfileTally {
    profiles: HashMap<String, UserProfile>,
}

impl ProfileTally {
    pub fn add(&mut self, post: &PostRecord, post_threshold: f64) {
        let spam = u64::from(is_spam_post(post, post_threshold));
        match self.profiles.get_mut(&post.author) {
            Some(p) => {
                p.post_count += 1;
                p.spam_post_count += spam;
                p.first_post_utc = p.first_post_utc.min(post.created_utc);
            }
            None => {
                self.profiles.insert(
                    post.author.clone(),
                    UserProfile {
                        author: post.author.clone(),
                        post_count: 1,
                        spam_post_count: spam,
                        first_post_utc: post.created_utc,
                    },
                );
            }
        }
    }

    pub fn merge(&mut self, other: ProfileTally) {
        for (author, q) in other.profiles {
            match self.profiles.get_mut(&author) {
                Some(p) => {
                    p.post_count += q.post_count;
                    p.spam_post_count += q.spam_post_count;
                    p.first_post_utc = p.first_post_utc.min(q.first_post_utc);
                }
                None => {
                    self.profiles.insert(author, q);
                }
            }
        }
    }

    /// Profiles sorted by author.
    pub fn into_profiles(self) -> Vec<UserProfile> {
        let mut v: Vec<_> = self.profiles.into_values().collect();
        v.sort_by(|a, b| a.author.cmp(&b.author));
        v
    }
}

pub fn build_profiles<'a>(
    posts: impl IntoIterator<Item = &'a PostRecord>,
    post_threshold: f64,
) -> Vec<UserProfile> {
    let mut tally = ProfileTally::default();
    for post in posts {
        tally.add(post, post_threshold);
    }
    tally.into_profiles()
}

/// Authors whose spam share is strictly above `user_threshold`, plus the
/// moderation bot under any capitalization.
pub fn filter_spam_users(profiles: &[UserProfile], user_threshold: f64) -> BTreeSet<String> {
    let mut excluded: BTreeSet<String> = profiles
        .iter()
        .filter(|p| {
            p.author.eq_ignore_ascii_case(AUTOMODERATOR)
                || p.spam_share().is_some_and(|s| s > user_threshold)
        })
        .map(|p| p.author.clone())
        .collect();
    excluded.insert(AUTOMODERATOR.to_owned());
    excluded
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SpamFilter {
    pub post_threshold: f64,
    pub user_threshold: f64,
}

impl Default for SpamFilter {
    fn default() -> Self {
        Self {
            post_threshold: DEFAULT_POST_THRESHOLD,
            user_threshold: DEFAULT_USER_THRESHOLD,
        }
    }
}

impl SpamFilter {
    /// Excluded author set for a corpus.
    pub fn excluded_authors(&self, posts: &[PostRecord]) -> BTreeSet<String> {
        filter_spam_users(&build_profiles(posts, self.post_threshold), self.user_threshold)
    }

    /// Drops every post by an excluded author. Returns the kept posts and the
    /// excluded set.
    pub fn apply(&self, posts: Vec<PostRecord>) -> (Vec<PostRecord>, BTreeSet<String>) {
        let excluded = self.excluded_authors(&posts);
        let kept = posts
            .into_iter()
            .filter(|p| !excluded.contains(&p.author))
            .collect();
        (kept, excluded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PostKind;

    fn post(author: &str, t: i64, spam: Option<f64>) -> PostRecord {
        PostRecord {
            id: format!("{author}-{t}"),
            author: author.into(),
            subreddit: "s".into(),
            kind: PostKind::Comment,
            created_utc: t,
            title: None,
            body: String::new(),
            spam_score: spam,
        }
    }

    #[test]
    fn spam_post_threshold_is_strict() {
        assert!(is_spam_post(&post("a", 1, Some(0.95)), 0.9));
        assert!(!is_spam_post(&post("a", 1, Some(0.9)), 0.9));
        assert!(!is_spam_post(&post("a", 1, None), 0.9));
    }

    fn profile(author: &str, posts: u64, spam: u64) -> UserProfile {
        UserProfile {
            author: author.into(),
            post_count: posts,
            spam_post_count: spam,
            first_post_utc: 1,
        }
    }

    #[test]
    fn user_threshold_is_strict() {
        let excluded = filter_spam_users(
            &[profile("six", 10, 6), profile("five", 10, 5), profile("none", 0, 0)],
            0.5,
        );
        assert!(excluded.contains("six"));
        assert!(!excluded.contains("five"));
        assert!(!excluded.contains("none"));
    }

    #[test]
    fn automoderator_always_excluded() {
        let excluded = filter_spam_users(&[profile("AutoModerator", 10, 0)], 0.5);
        assert!(excluded.contains("AutoModerator"));
        let excluded = filter_spam_users(&[profile("automoderator", 3, 0)], 0.5);
        assert!(excluded.contains("automoderator"));
        assert!(filter_spam_users(&[], 0.5).contains(AUTOMODERATOR));
    }

    #[test]
    fn profiles_track_first_post_and_merge() {
        let posts = [
            post("a", 50, Some(0.99)),
            post("a", 10, None),
            post("b", 30, Some(0.1)),
        ];
        let whole = build_profiles(&posts, 0.9);
        assert_eq!(whole[0], UserProfile { author: "a".into(), post_count: 2, spam_post_count: 1, first_post_utc: 10 });

        let mut left = ProfileTally::default();
        left.add(&posts[0], 0.9);
        let mut right = ProfileTally::default();
        right.add(&posts[1], 0.9);
        right.add(&posts[2], 0.9);
        left.merge(right);
        assert_eq!(left.into_profiles(), whole);
    }

    #[test]
    fn apply_removes_all_posts_of_excluded_users() {
        let posts = vec![
            post("spammer", 1, Some(0.99)),
            post("spammer", 2, Some(0.95)),
            post("spammer", 3, None),
            post("ok", 4, Some(0.99)),
            post("ok", 5, None),
            post("AutoModerator", 6, None),
        ];
        let (kept, excluded) = SpamFilter::default().apply(posts);
        assert_eq!(excluded.len(), 2);
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|p| p.author == "ok"));
    }
}
