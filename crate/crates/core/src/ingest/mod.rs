//! Archive, price, and registry ingestion.

mod mentions;
mod posts;
mod prices;
mod registry;

use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub use mentions::{match_mentions, tokenize, MatchOptions, MentionMatcher};
pub use posts::{load_posts, ArchiveDialect, LoadManifest, PostKind, PostReader, PostRecord};
pub use prices::{fill_gaps, load_prices, parse_prices, PriceBar, PriceHistory};
pub use registry::{slug, CoinEntry, CoinRegistry};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: corrupt archive ({skipped} malformed lines vs {parsed} parsed)", path.display())]
    CorruptArchive {
        path: PathBuf,
        parsed: usize,
        skipped: usize,
    },
    #[error("{currency}: invalid price bar: {detail}")]
    InvalidBar { currency: String, detail: String },
    #[error("{currency}: duplicate price bar for {date}")]
    DuplicateBar { currency: String, date: NaiveDate },
    #[error("invalid coin registry: {0}")]
    InvalidRegistry(String),
}
