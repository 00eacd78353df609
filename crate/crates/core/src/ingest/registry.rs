//! Coin registry: canonical names, match vocabulary, and listing dates.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinEntry {
    pub canonical_name: String,
    /// Lowercase names to search for. Ticker symbols are deliberately not
    /// listed: "eth" or "sol" collide with ordinary words.
    pub match_terms: Vec<String>,
    /// First day with price data; earlier posts are ignored for this coin.
    pub listing_date: NaiveDate,
}

impl CoinEntry {
    /// File-name friendly form of the canonical name: `"The Sandbox"` →
    /// `"the-sandbox"`.
    pub fn slug(&self) -> String {
        slug(&self.canonical_name)
    }
}

pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoinRegistry {
    #[serde(rename = "coin", default)]
    pub entries: Vec<CoinEntry>,
}

impl CoinRegistry {
    pub fn new(entries: Vec<CoinEntry>) -> Result<Self, IngestError> {
        let registry = Self { entries };
        registry.validate()?;
        Ok(registry)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |detail: String| Err(IngestError::InvalidRegistry(detail));
        let mut names = HashSet::new();
        for entry in &self.entries {
            if entry.canonical_name.trim().is_empty() {
                return invalid("empty canonical_name".into());
            }
            if !names.insert(entry.canonical_name.as_str()) {
                return invalid(format!("duplicate canonical_name {:?}", entry.canonical_name));
            }
            if entry.match_terms.is_empty() {
                return invalid(format!("{}: no match_terms", entry.canonical_name));
            }
            for term in &entry.match_terms {
                if term.trim().is_empty() || *term != term.to_lowercase() {
                    return invalid(format!(
                        "{}: match term {term:?} must be non-empty lowercase",
                        entry.canonical_name
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&CoinEntry> {
        self.entries.iter().find(|e| e.canonical_name == name)
    }

    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        let registry: CoinRegistry =
            toml::from_str(text).map_err(|e| IngestError::InvalidRegistry(e.to_string()))?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}
