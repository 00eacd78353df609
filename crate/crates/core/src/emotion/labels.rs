//! Per-post emotion label files and the post/label join.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmotionError;
use crate::ingest::PostRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Joy,
    Sadness,
    Anger,
    Fear,
    Surprise,
    Neutral,
}

impl Emotion {
    /// Class order; also the argmax tie-break order.
    pub const ALL: [Emotion; 6] = [
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Neutral,
    ];
    /// The five emotions reported in subreddit and event tables.
    pub const REPORTED: [Emotion; 5] = [
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Surprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Surprise => "surprise",
            Emotion::Neutral => "neutral",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const SUM_TOLERANCE: f64 = 1e-6;

/// Highest-scoring class, earliest in [`Emotion::ALL`] on ties.
pub fn argmax(scores: &[f64; 6]) -> Emotion {
    let mut best = 0;
    for i in 1..6 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Emotion::ALL[best]
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionLabel {
    pub post_id: String,
    pub scores: [f64; 6],
    pub label: Emotion,
}

impl EmotionLabel {
    pub fn new(post_id: impl Into<String>, scores: [f64; 6]) -> Self {
        Self {
            post_id: post_id.into(),
            label: argmax(&scores),
            scores,
        }
    }

    pub fn score(&self, emotion: Emotion) -> f64 {
        self.scores[emotion.index()]
    }
}

/// Wire form of one label-file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub post_id: String,
    pub joy: f64,
    pub sadness: f64,
    pub anger: f64,
    pub fear: f64,
    pub surprise: f64,
    pub neutral: f64,
    pub label: Emotion,
}

impl From<&EmotionLabel> for LabelRecord {
    fn from(l: &EmotionLabel) -> Self {
        let [joy, sadness, anger, fear, surprise, neutral] = l.scores;
        Self {
            post_id: l.post_id.clone(),
            joy,
            sadness,
            anger,
            fear,
            surprise,
            neutral,
            label: l.label,
        }
    }
}

impl TryFrom<LabelRecord> for EmotionLabel {
    type Error = String;

    fn try_from(r: LabelRecord) -> Result<Self, String> {
        if r.post_id.is_empty() {
            return Err("empty post_id".into());
        }
        let scores = [r.joy, r.sadness, r.anger, r.fear, r.surprise, r.neutral];
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(format!("{}: score {bad} outside [0, 1]", r.post_id));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(format!("{}: scores sum to {sum}", r.post_id));
        }
        let expected = argmax(&scores);
        if r.label != expected {
            return Err(format!(
                "{}: label {} disagrees with argmax {}",
                r.post_id,
                r.label.name(),
                expected.name()
            ));
        }
        Ok(EmotionLabel {
            post_id: r.post_id,
            scores,
            label: r.label,
        })
    }
}

/// Labels keyed by post id.
#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    labels: HashMap<String, EmotionLabel>,
}

impl LabelIndex {
    pub fn from_labels(labels: impl IntoIterator<Item = EmotionLabel>) -> Result<Self, EmotionError> {
        let mut index = HashMap::new();
        for label in labels {
            if index.contains_key(&label.post_id) {
                return Err(EmotionError::DuplicateLabel(label.post_id));
            }
            index.insert(label.post_id.clone(), label);
        }
        Ok(Self { labels: index })
    }

    pub fn parse(reader: impl BufRead) -> Result<Self, EmotionError> {
        let mut labels = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EmotionError::InvalidLabel {
                line: n + 1,
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let invalid = |detail: String| EmotionError::InvalidLabel { line: n + 1, detail };
            let record: LabelRecord =
                serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
            labels.push(EmotionLabel::try_from(record).map_err(invalid)?);
        }
        Self::from_labels(labels)
    }

    pub fn load(path: &Path) -> Result<Self, EmotionError> {
        let file = std::fs::File::open(path).map_err(|source| EmotionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, post_id: &str) -> Option<&EmotionLabel> {
        self.labels.get(post_id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct JoinManifest {
    pub joined: usize,
    /// Posts without a label.
    pub unlabeled: usize,
    /// Labels whose post is not in the corpus.
    pub orphan_labels: usize,
}

/// Inner join of posts with their labels, in post order.
pub fn join_labels<'p, 'l>(
    posts: impl IntoIterator<Item = &'p PostRecord>,
    labels: &'l LabelIndex,
) -> (Vec<(&'p PostRecord, &'l EmotionLabel)>, JoinManifest) {
    let mut joined = Vec::new();
    let mut manifest = JoinManifest::default();
    for post in posts {
        match labels.get(&post.id) {
            Some(label) => joined.push((post, label)),
            None => manifest.unlabeled += 1,
        }
    }
    manifest.joined = joined.len();
    manifest.orphan_labels = labels.len().saturating_sub(manifest.joined);
    (joined, manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PostKind;

    fn post(id: &str) -> PostRecord {
        PostRecord {
            id: id.into(),
            author: "a".into(),
            subreddit: "s".into(),
            kind: PostKind::Comment,
            created_utc: 1_600_000_000,
            title: None,
            body: String::new(),
            spam_score: None,
        }
    }

    fn line(id: &str, joy: f64, neutral: f64, label: &str) -> String {
        format!(
            r#"{{"post_id":"{id}","joy":{joy},"sadness":0,"anger":0,"fear":0,"surprise":0,"neutral":{neutral},"label":"{label}"}}"#
        )
    }

    #[test]
    fn join_counts_unlabeled_and_orphans() {
        let text = [line("p1", 0.7, 0.3, "joy"), line("p2", 0.2, 0.8, "neutral"), line("zz", 1.0, 0.0, "joy")]
            .join("\n");
        let labels = LabelIndex::parse(text.as_bytes()).unwrap();
        let posts = [post("p1"), post("p2"), post("p3")];
        let (joined, manifest) = join_labels(&posts, &labels);
        assert_eq!(joined.len(), 2);
        assert_eq!(manifest, JoinManifest { joined: 2, unlabeled: 1, orphan_labels: 1 });
    }

    #[test]
    fn empty_label_file() {
        let labels = LabelIndex::parse("".as_bytes()).unwrap();
        let posts = [post("p1")];
        let (joined, manifest) = join_labels(&posts, &labels);
        assert!(joined.is_empty());
        assert_eq!(manifest.unlabeled, 1);
    }

    #[test]
    fn duplicate_label() {
        let text = [line("p1", 0.7, 0.3, "joy"), line("p1", 0.7, 0.3, "joy")].join("\n");
        assert!(matches!(
            LabelIndex::parse(text.as_bytes()),
            Err(EmotionError::DuplicateLabel(id)) if id == "p1"
        ));
    }

    #[test]
    fn rejects_invalid_records() {
        for bad in [
            line("p", 0.7, 0.7, "joy"),
            line("p", 0.3, 0.7, "joy"),
            line("p", -0.1, 1.1, "neutral"),
            r#"{"post_id":"p","joy":1}"#.to_string(),
        ] {
            assert!(
                matches!(LabelIndex::parse(bad.as_bytes()), Err(EmotionError::InvalidLabel { line: 1, .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn argmax_ties_follow_class_order() {
        assert_eq!(argmax(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.5]), Emotion::Joy);
        assert_eq!(argmax(&[0.0, 0.0, 0.4, 0.4, 0.0, 0.2]), Emotion::Anger);
        assert_eq!(argmax(&[0.0; 6]), Emotion::Joy);
    }
}
