//! Post archives: newline-delimited records, one submission or comment per line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostKind {
    Submission,
    Comment,
}

/// One submission or comment.
///
/// `spam_score` carries an externally computed spam probability; it is never
/// computed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub author: String,
    pub subreddit: String,
    pub kind: PostKind,
    pub created_utc: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spam_score: Option<f64>,
}

impl PostRecord {
    /// Checks the per-record invariants. Uniqueness of `id` is a corpus-level
    /// property and is enforced by the reader.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.created_utc <= 0 {
            return Err(format!("non-positive created_utc {}", self.created_utc));
        }
        if self.kind == PostKind::Comment && self.title.is_some() {
            return Err("comment carries a title".into());
        }
        if let Some(s) = self.spam_score {
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("spam_score {s} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// UTC calendar day of creation.
    pub fn day(&self) -> NaiveDate {
        DateTime::from_timestamp(self.created_utc, 0)
            .map(|dt| dt.date_naive())
            .unwrap_or(NaiveDate::MIN)
    }

    /// Text used for mention matching and emotion scoring: title and body
    /// joined by a single space for submissions, the body for comments.
    pub fn text(&self) -> String {
        match (&self.kind, &self.title) {
            (PostKind::Submission, Some(title)) => format!("{title} {}", self.body),
            _ => self.body.clone(),
        }
    }

    /// Canonical single-line serialization (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("PostRecord serializes")
    }
}

/// Input record dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveDialect {
    /// Field names exactly as in [`PostRecord`].
    #[default]
    Canonical,
    /// Pushshift-style dumps: `selftext` for submission bodies, kind inferred
    /// from the presence of `title`, `created_utc` as number or string.
    Pushshift,
}

impl ArchiveDialect {
    pub fn parse_line(self, line: &str) -> Result<PostRecord, String> {
        match self {
            ArchiveDialect::Canonical => {
                serde_json::from_str::<PostRecord>(line).map_err(|e| e.to_string())
            }
            ArchiveDialect::Pushshift => parse_pushshift(line),
        }
    }
}

fn parse_pushshift(line: &str) -> Result<PostRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record is not an object")?;
    let string = |key: &str| obj.get(key).and_then(Value::as_str).map(str::to_owned);

    let id = string("id").ok_or("missing id")?;
    let author = string("author").ok_or("missing author")?;
    let subreddit = string("subreddit").ok_or("missing subreddit")?;
    let created_utc = match obj.get("created_utc") {
        Some(Value::Number(n)) => n
            .as_i64()
            .or_else(|| n.as_f64().map(|f| f as i64))
            .ok_or("bad created_utc")?,
        Some(Value::String(s)) => s
            .parse::<f64>()
            .map(|f| f as i64)
            .map_err(|_| "bad created_utc")?,
        _ => return Err("missing created_utc".into()),
    };
    let spam_score = match obj.get("spam_score") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or("bad spam_score")?),
    };

    let (kind, title, body) = match string("title") {
        Some(title) => (
            PostKind::Submission,
            Some(title),
            string("selftext").unwrap_or_default(),
        ),
        None => (
            PostKind::Comment,
            None,
            string("body").ok_or("comment without body")?,
        ),
    };

    Ok(PostRecord {
        id,
        author,
        subreddit,
        kind,
        created_utc,
        title,
        body,
        spam_score,
    })
}

/// Parse outcome counts for one archive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadManifest {
    pub parsed: usize,
    pub skipped: usize,
}

impl LoadManifest {
    /// More than half of the non-blank lines were rejected.
    pub fn is_corrupt(&self) -> bool {
        self.skipped > self.parsed
    }
}

/// Streaming reader over an archive. Malformed, invalid, and duplicate-id
/// lines are counted and skipped; blank lines are ignored. I/O errors end
/// the stream with an error item.
pub struct PostReader<R> {
    reader: R,
    dialect: ArchiveDialect,
    seen: HashSet<String>,
    manifest: LoadManifest,
    buf: Vec<u8>,
    failed: bool,
}

impl<R: BufRead> PostReader<R> {
    pub fn new(reader: R, dialect: ArchiveDialect) -> Self {
        Self {
            reader,
            dialect,
            seen: HashSet::new(),
            manifest: LoadManifest::default(),
            buf: Vec::new(),
            failed: false,
        }
    }

    pub fn manifest(&self) -> LoadManifest {
        self.manifest
    }

    fn accept(&mut self, line: &[u8]) -> Option<PostRecord> {
        let record = std::str::from_utf8(line)
            .map_err(|e| e.to_string())
            .and_then(|s| self.dialect.parse_line(s))
            .and_then(|r| r.validate().map(|()| r));
        match record {
            Ok(r) if self.seen.insert(r.id.clone()) => {
                self.manifest.parsed += 1;
                Some(r)
            }
            _ => {
                self.manifest.skipped += 1;
                None
            }
        }
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = std::io::Result<PostRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
            let line = std::mem::take(&mut self.buf);
            let trimmed = line.trim_ascii();
            if trimmed.is_empty() {
                continue;
            }
            let record = self.accept(trimmed);
            self.buf = line;
            if let Some(r) = record {
                return Some(Ok(r));
            }
        }
    }
}

/// Reads a whole archive. Fails on I/O errors or when more than half of the
/// lines are malformed.
pub fn load_posts(
    path: &Path,
    dialect: ArchiveDialect,
) -> Result<(Vec<PostRecord>, LoadManifest), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut reader = PostReader::new(BufReader::new(file), dialect);
    let mut posts = Vec::new();
    for item in reader.by_ref() {
        posts.push(item.map_err(io_err)?);
    }
    let manifest = reader.manifest();
    if manifest.is_corrupt() {
        return Err(IngestError::CorruptArchive {
            path: path.to_path_buf(),
            parsed: manifest.parsed,
            skipped: manifest.skipped,
        });
    }
    Ok((posts, manifest))
}
