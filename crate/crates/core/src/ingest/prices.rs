//! Daily close prices: CSV with a `date,close` header.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use super::IngestError;
use crate::signal::Series;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub close: f64,
}

/// A dense daily close series plus the days that had no bar in the source
/// file and were forward-filled from the previous close.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    pub series: Series,
    pub filled: Vec<NaiveDate>,
}

#[derive(Deserialize)]
struct Row {
    date: String,
    close: String,
}

pub fn parse_prices(
    reader: impl std::io::Read,
    currency: &str,
) -> Result<PriceHistory, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut bars: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| IngestError::InvalidBar {
            currency: currency.to_owned(),
            detail: format!("row {}: {e}", line + 1),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| {
            IngestError::InvalidBar {
                currency: currency.to_owned(),
                detail: format!("row {}: date {:?}: {e}", line + 1, row.date),
            }
        })?;
        let close: f64 = row.close.parse().map_err(|_| IngestError::InvalidBar {
            currency: currency.to_owned(),
            detail: format!("{date}: close {:?} is not a number", row.close),
        })?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(IngestError::InvalidBar {
                currency: currency.to_owned(),
                detail: format!("{date}: close {close} is not positive"),
            });
        }
        if bars.insert(date, close).is_some() {
            return Err(IngestError::DuplicateBar {
                currency: currency.to_owned(),
                date,
            });
        }
    }
    let bars: Vec<PriceBar> = bars
        .into_iter()
        .map(|(date, close)| PriceBar { date, close })
        .collect();
    fill_gaps(currency, &bars)
}

/// Forward-fills interior gaps of date-sorted, unique bars.
pub fn fill_gaps(currency: &str, bars: &[PriceBar]) -> Result<PriceHistory, IngestError> {
    let first = bars.first().ok_or_else(|| IngestError::InvalidBar {
        currency: currency.to_owned(),
        detail: "no price bars".into(),
    })?;
    let mut values = vec![first.close];
    let mut filled = Vec::new();
    let mut last = *first;
    for bar in &bars[1..] {
        let mut day = last.date.succ_opt().expect("date in range");
        while day < bar.date {
            values.push(last.close);
            filled.push(day);
            day = day.succ_opt().expect("date in range");
        }
        values.push(bar.close);
        last = *bar;
    }
    Ok(PriceHistory {
        series: Series::daily(currency, first.date, values),
        filled,
    })
}

pub fn load_prices(path: &Path, currency: &str) -> Result<PriceHistory, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_prices(std::io::BufReader::new(file), currency)
}
