//! Emotion analytics over externally produced per-post labels.

mod curves;
mod labels;

use std::path::PathBuf;

use thiserror::Error;

pub use curves::{
    default_events, event_radar, mean_total, monthly_curve, subreddit_summary, weekly_curve,
    AverageMode, CurveBucket, CurveScope, EmotionCurve, EmotionTally, MarketEvent, Marker, Period,
    PeriodTally, RadarRow, SubredditRow,
};
pub use labels::{
    argmax, join_labels, Emotion, EmotionLabel, JoinManifest, LabelIndex, LabelRecord,
    SUM_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate label for post {0}")]
    DuplicateLabel(String),
    #[error("label file line {line}: {detail}")]
    InvalidLabel { line: usize, detail: String },
}
