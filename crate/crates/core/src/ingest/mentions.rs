//! Coin-name mention matching.
//!
//! Text and terms are lowercased and split on non-alphanumeric characters; a
//! term matches when its token sequence occurs contiguously in the text.
//! Only names are matched, never ticker symbols.

use std::collections::{BTreeSet, HashMap};

use super::{CoinRegistry, PostRecord};

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    /// Accept a trailing "s" on the last token of a term ("bitcoins").
    pub plural_suffix: bool,
}

struct Term {
    coin: usize,
    tokens: Vec<String>,
}

/// Registry compiled into a first-token index.
pub struct MentionMatcher {
    names: Vec<String>,
    by_first: HashMap<String, Vec<Term>>,
    options: MatchOptions,
}

impl MentionMatcher {
    pub fn new(registry: &CoinRegistry, options: MatchOptions) -> Self {
        let mut by_first: HashMap<String, Vec<Term>> = HashMap::new();
        for (coin, entry) in registry.entries.iter().enumerate() {
            for term in &entry.match_terms {
                let tokens = tokenize(term);
                if let Some(first) = tokens.first() {
                    by_first
                        .entry(first.clone())
                        .or_default()
                        .push(Term { coin, tokens });
                }
            }
        }
        Self {
            names: registry
                .entries
                .iter()
                .map(|e| e.canonical_name.clone())
                .collect(),
            by_first,
            options,
        }
    }

    fn token_eq(&self, text: &str, term: &str, last: bool) -> bool {
        text == term
            || (last
                && self.options.plural_suffix
                && text.len() == term.len() + 1
                && text.starts_with(term)
                && text.ends_with('s'))
    }

    fn term_at(&self, tokens: &[String], start: usize, term: &Term) -> bool {
        let n = term.tokens.len();
        if start + n > tokens.len() {
            return false;
        }
        term.tokens
            .iter()
            .enumerate()
            .all(|(j, t)| self.token_eq(&tokens[start + j], t, j + 1 == n))
    }

    /// Canonical names of every coin mentioned in `text`.
    pub fn match_text(&self, text: &str) -> BTreeSet<String> {
        let tokens = tokenize(text);
        let mut hits = vec![false; self.names.len()];
        for (i, token) in tokens.iter().enumerate() {
            let mut keys = vec![token.as_str()];
            if self.options.plural_suffix {
                if let Some(stem) = token.strip_suffix('s') {
                    keys.push(stem);
                }
            }
            for key in keys {
                for term in self.by_first.get(key).into_iter().flatten() {
                    if !hits[term.coin] && self.term_at(&tokens, i, term) {
                        hits[term.coin] = true;
                    }
                }
            }
        }
        hits.iter()
            .zip(&self.names)
            .filter(|(hit, _)| **hit)
            .map(|(_, name)| name.clone())
            .collect()
    }

    pub fn match_post(&self, post: &PostRecord) -> BTreeSet<String> {
        self.match_text(&post.text())
    }
}

/// One-shot convenience wrapper around [`MentionMatcher`].
pub fn match_mentions(
    post: &PostRecord,
    registry: &CoinRegistry,
    options: MatchOptions,
) -> BTreeSet<String> {
    MentionMatcher::new(registry, options).match_post(post)
}
