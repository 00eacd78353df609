mod common;

use coinpulse::signal::{
    cross_correlate, default_penalty, normalize_max, pelt, CostModel, CrossCorrelator, Pelt,
    Series, SignalError,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn daily(values: Vec<f64>) -> Series {
    Series::daily("s", day(2021, 1, 1), values)
}

#[test]
fn obvious_mean_shift_is_found() {
    let mut values = vec![0.0; 20];
    values.extend(vec![10.0; 20]);
    let r = pelt(&daily(values), default_penalty(40), CostModel::L2Mean).unwrap();
    assert_eq!(r.breakpoints, vec![20]);
    assert_eq!(r.total_cost, default_penalty(40));
}

#[test]
fn constant_series_and_huge_penalty_give_no_breakpoints() {
    let r = pelt(&daily(vec![3.0; 30]), 1.0, CostModel::L2Mean).unwrap();
    assert!(r.breakpoints.is_empty());
    let r = pelt(&daily(vec![0.0, 9.0, 0.0, 9.0, 0.0, 9.0]), f64::INFINITY, CostModel::L2Mean).unwrap();
    assert!(r.breakpoints.is_empty());
}

#[test]
fn invalid_penalties_are_rejected() {
    for p in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            pelt(&daily(vec![1.0, 2.0, 3.0]), p, CostModel::L2Mean),
            Err(SignalError::InvalidPenalty(_))
        ));
    }
    assert!(matches!(
        pelt(&daily(vec![1.0]), 1.0, CostModel::L2Mean),
        Err(SignalError::TooShort { .. })
    ));
}

#[test]
fn small_series_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let n = rng.gen_range(2..=12);
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-5..=5i32))).collect();
        let penalty = rng.gen_range(0.1..20.0);
        let min_len = rng.gen_range(1..=3);
        let detector = Pelt { min_segment_length: min_len, ..Pelt::default() };
        let got = detector.detect(&values, penalty).unwrap();
        let want = exhaustive_min_cost(&values, penalty, min_len);
        assert!(close_enough(got.total_cost, want), "case {case}: {} vs {want}", got.total_cost);
        assert!(got.breakpoints.windows(2).all(|w| w[1] - w[0] >= min_len));
    }
}

#[test]
fn medium_series_match_quadratic_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..20 {
        let n = rng.gen_range(20..=120);
        let mut level = 0.0;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.05) {
                    level = rng.gen_range(-10.0..10.0);
                }
                level + rng.gen_range(-1.0..1.0)
            })
            .collect();
        let got = Pelt::default().detect(&values, default_penalty(n)).unwrap();
        let want = optimal_partitioning(&values, default_penalty(n), 2);
        assert!(close_enough(got.total_cost, want), "{} vs {want}", got.total_cost);
    }
}

#[test]
fn planted_lag_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = smooth_noise(&mut rng, 400);
    for d in [-20i64, -3, 0, 4, 25] {
        // price[t] = posts[t - d]
        let posts = Series::daily("p", day(2021, 1, 1), base[100..300].to_vec());
        let price_values: Vec<f64> = (100..300).map(|t| 50.0 + 3.0 * base[(t as i64 - d) as usize]).collect();
        let price = Series::daily("q", day(2021, 1, 1), price_values);
        let lc = cross_correlate(&posts, &price, 30).unwrap();
        assert_eq!(lc.best_lag, -d);
        assert!(lc.best_coefficient > 0.999);
    }
}

#[test]
fn correlation_aligns_by_date() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = smooth_noise(&mut rng, 200);
    let posts = Series::daily("p", day(2021, 1, 1), base.clone());
    let price = Series::daily("q", day(2021, 1, 11), base[10..150].to_vec());
    let lc = cross_correlate(&posts, &price, 15).unwrap();
    assert_eq!(lc.best_lag, 0);
    assert_eq!(lc.best_coefficient, 1.0);
}

#[test]
fn too_short_overlap_is_degenerate() {
    let posts = daily((0..10).map(f64::from).collect());
    let price = daily((0..10).map(|v| f64::from(v) * 2.0).collect());
    assert!(matches!(
        CrossCorrelator::default().correlate(&posts, &price),
        Err(SignalError::DegenerateSeries(_))
    ));
    let lc = CrossCorrelator { max_lag: 2, min_overlap: 5 }.correlate(&posts, &price).unwrap();
    assert_eq!(lc.lags, vec![-2, -1, 0, 1, 2]);
}

#[test]
fn normalization_by_maximum() {
    let s = normalize_max(&daily(vec![2.0, 4.0, 1.0])).unwrap();
    assert_eq!(s.values, vec![0.5, 1.0, 0.25]);
    assert!(normalize_max(&daily(vec![0.0, 0.0])).is_err());
}

fn values(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-100.0f64..100.0, n)
}

proptest! {
    #[test]
    fn pelt_is_scale_equivariant(v in values(2..60), c in 0.01f64..100.0, beta in 0.5f64..50.0) {
        let a = Pelt::default().detect(&v, beta).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let b = Pelt::default().detect(&scaled, beta * c * c).unwrap();
        prop_assert!(close_enough(a.total_cost * c * c, b.total_cost));
    }

    #[test]
    fn pelt_breakpoints_are_increasing_and_in_range(v in values(2..80), beta in 0.1f64..30.0) {
        let r = Pelt::default().detect(&v, beta).unwrap();
        prop_assert!(r.breakpoints.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(r.breakpoints.iter().all(|&b| b >= 2 && b + 2 <= v.len()));
    }

    #[test]
    fn correlation_is_bounded_and_affine_invariant(
        a in values(40..80),
        b in values(40..80),
        scale in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        shift in -1000.0f64..1000.0,
    ) {
        let posts = daily(a.clone());
        let price = daily(b.clone());
        let lc = CrossCorrelator { max_lag: 5, min_overlap: 30 }.correlate(&posts, &price);
        let Ok(lc) = lc else { return Ok(()) };
        prop_assert!(lc.coefficients.iter().all(|c| (-1.0..=1.0).contains(c)));

        let moved = daily(b.iter().map(|x| scale * x + shift).collect());
        let lm = CrossCorrelator { max_lag: 5, min_overlap: 30 }.correlate(&posts, &moved).unwrap();
        prop_assert_eq!(&lm.lags, &lc.lags);
        for (x, y) in lc.coefficients.iter().zip(&lm.coefficients) {
            prop_assert!((x * scale.signum() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn swapping_series_mirrors_lags(a in values(40..70), b in values(40..70)) {
        let c = CrossCorrelator { max_lag: 4, min_overlap: 30 };
        let (Ok(ab), Ok(ba)) = (c.correlate(&daily(a.clone()), &daily(b.clone())), c.correlate(&daily(b), &daily(a))) else {
            return Ok(());
        };
        for (lag, coef) in ab.lags.iter().zip(&ab.coefficients) {
            let mirrored = ba.coefficient_at(-lag).unwrap();
            prop_assert!((coef - mirrored).abs() < 1e-12);
        }
    }
}
