//! Batch analytics for cryptocurrency community archives.
//!
//! The pipeline ingests post archives, daily close prices, and a coin
//! registry; builds activity series; detects changepoints; estimates
//! lead-lag correlation between post volume and price; aggregates emotion
//! labels; and replays a post-trend trading strategy with fees.

pub mod backtest;
pub mod cli;
pub mod corpus_stats;
pub mod emotion;
pub mod ingest;
pub mod report;
pub mod signal;
