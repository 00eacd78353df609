use std::path::{Path, PathBuf};

use coinpulse::emotion::{
    default_events, event_radar, join_labels, mean_total, monthly_curve, weekly_curve,
    AverageMode, CurveScope, Emotion, EmotionError, LabelIndex,
};
use coinpulse::ingest::{load_posts, ArchiveDialect, PostRecord};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/emotion").join(name)
}

fn load() -> (Vec<PostRecord>, LabelIndex) {
    let (posts, _) = load_posts(&fixture("posts.ndjson"), ArchiveDialect::Canonical).unwrap();
    (posts, LabelIndex::load(&fixture("labels.ndjson")).unwrap())
}

#[test]
fn hand_written_label_file_joins() {
    let (posts, labels) = load();
    assert_eq!(labels.len(), 7);
    let (joined, m) = join_labels(&posts, &labels);
    assert_eq!((m.joined, m.unlabeled, m.orphan_labels), (6, 1, 1));
    assert_eq!(joined[0].1.label, Emotion::Joy);
}

#[test]
fn weekly_buckets_by_iso_week() {
    let (posts, labels) = load();
    let (joined, _) = join_labels(&posts, &labels);
    let curve = weekly_curve(joined.iter().copied(), &CurveScope::Corpus, AverageMode::ProbabilityMean);
    let weeks: Vec<String> = curve.buckets.iter().map(|b| b.period.to_string()).collect();
    assert_eq!(weeks, ["2021-W11", "2021-W12", "2022-W22", "2022-W26"]);
    let first = &curve.buckets[0];
    assert_eq!(first.post_count, 2);
    assert_eq!(first.mean_scores, [0.4375, 0.09375, 0.0, 0.28125, 0.03125, 0.15625]);
    assert!(curve.buckets.iter().all(|b| (mean_total(b) - 1.0).abs() < 1e-12));

    let shares = weekly_curve(joined.iter().copied(), &CurveScope::Corpus, AverageMode::LabelShare);
    assert_eq!(shares.buckets[0].mean_scores, [0.5, 0.0, 0.0, 0.5, 0.0, 0.0]);

    let eth = weekly_curve(joined.iter().copied(), &CurveScope::Subreddit("ethtrader".into()), AverageMode::ProbabilityMean);
    assert_eq!(eth.buckets.iter().map(|b| b.post_count).sum::<u64>(), 3);
}

#[test]
fn event_months_and_missing_events() {
    let (posts, labels) = load();
    let (joined, _) = join_labels(&posts, &labels);
    let (rows, warnings) = event_radar(joined.iter().copied(), &default_events(), AverageMode::ProbabilityMean);
    let months: Vec<String> = rows.iter().map(|r| r.month.format("%Y-%m").to_string()).collect();
    assert_eq!(months, ["2021-03", "2022-06"]);
    assert_eq!(warnings.len(), 4);
    assert_eq!(rows[1].posts, 3);
    assert_eq!(rows[1].means, [0.25 / 3.0, 1.0 / 3.0, 0.125 / 3.0, 0.25, 0.5 / 3.0]);

    let monthly = monthly_curve(joined.iter().copied(), &CurveScope::Corpus, AverageMode::ProbabilityMean);
    assert_eq!(monthly.buckets.len(), 2);
}

fn parse(text: &str) -> Result<LabelIndex, EmotionError> {
    LabelIndex::parse(text.as_bytes())
}

#[test]
fn malformed_label_files_are_rejected() {
    let ok = r#"{"post_id":"a","joy":0.5,"sadness":0.5,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"joy"}"#;
    assert!(parse(ok).is_ok());
    let cases = [
        r#"{"post_id":"a","joy":0.5,"sadness":0.4,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"joy"}"#,
        r#"{"post_id":"a","joy":0.2,"sadness":0.8,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"joy"}"#,
        r#"{"post_id":"a","joy":1.5,"sadness":-0.5,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"joy"}"#,
        r#"{"post_id":"a","joy":1,"sadness":0,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"love"}"#,
        r#"{"post_id":"a","joy":1,"sadness":0,"anger":0,"fear":0,"surprise":0,"neutral":0,"label":"joy","extra":1}"#,
        r#"{"post_id":"a","joy":1}"#,
    ];
    for (i, case) in cases.iter().enumerate() {
        assert!(matches!(parse(case), Err(EmotionError::InvalidLabel { line: 1, .. })), "case {i}");
    }
    assert!(matches!(parse(&format!("{ok}\n{ok}")), Err(EmotionError::DuplicateLabel(id)) if id == "a"));
}
