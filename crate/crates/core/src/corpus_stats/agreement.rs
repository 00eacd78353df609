use super::StatsError;

/// Fleiss' kappa for a subjects × categories matrix of rater counts. Every
/// row must sum to the same number of raters `n ≥ 2`.
pub fn fleiss_kappa<R: AsRef<[u32]>>(ratings: &[R]) -> Result<f64, StatsError> {
    let invalid = |msg: String| Err(StatsError::InvalidRatings(msg));
    let Some(first) = ratings.first() else {
        return invalid("no subjects".into());
    };
    let k = first.as_ref().len();
    if k == 0 {
        return invalid("no categories".into());
    }
    let n: u64 = first.as_ref().iter().map(|&c| u64::from(c)).sum();
    if n < 2 {
        return invalid(format!("need at least 2 raters per subject, got {n}"));
    }
    for (i, row) in ratings.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != k {
            return invalid(format!("subject {i} has {} categories, expected {k}", row.len()));
        }
        let sum: u64 = row.iter().map(|&c| u64::from(c)).sum();
        if sum != n {
            return invalid(format!("subject {i} has {sum} ratings, expected {n}"));
        }
    }

    let subjects = ratings.len() as f64;
    let n_f = n as f64;
    let mut column_totals = vec![0u64; k];
    let mut agreement_sum = 0.0;
    for row in ratings {
        let mut squares = 0u64;
        for (j, &c) in row.as_ref().iter().enumerate() {
            column_totals[j] += u64::from(c);
            squares += u64::from(c) * u64::from(c);
        }
        agreement_sum += (squares - n) as f64 / (n_f * (n_f - 1.0));
    }
    let p_bar = agreement_sum / subjects;
    let total = subjects * n_f;
    let p_e: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / total;
            p * p
        })
        .sum();
    if 1.0 - p_e <= f64::EPSILON {
        return Err(StatsError::UndefinedKappa);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}
