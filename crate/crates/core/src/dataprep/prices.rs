//! Price CSV ingestion and the joined price/score series.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DataError, CHANNELS, SOURCES};
use crate::sentiment::{DailySourceScores, NEUTRAL_FILL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(ticker: &str, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self, DataError> {
        if dates.len() != prices.len() {
            return Err(DataError::Invalid(format!(
                "{ticker}: {} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::Invalid(format!("{ticker}: dates not strictly increasing")));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(DataError::Invalid(format!("{ticker}: price {p} is not positive")));
        }
        Ok(Self {
            ticker: ticker.to_string(),
            dates,
            prices,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

#[derive(Debug, serde::Deserialize)]
struct PriceRecord {
    date: String,
    ticker: String,
    adj_close: String,
}

/// Parses `date,ticker,adj_close` rows into one series per ticker.
///
/// The calendar is every date seen in the file. A ticker absent on any of
/// those dates is dropped with a warning. Output is sorted by ticker.
pub fn parse_prices<R: Read>(reader: R) -> Result<Vec<PriceSeries>, DataError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "ticker", "adj_close"] {
        return Err(DataError::Parse {
            line: 1,
            reason: format!("expected header date,ticker,adj_close, found {:?}", headers),
        });
    }
    let mut by_ticker: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    let mut calendar = BTreeSet::new();
    for (k, record) in r.deserialize::<PriceRecord>().enumerate() {
        let line = k + 2;
        let rec = record?;
        let bad = |reason: String| DataError::Parse { line, reason };
        let date: NaiveDate = rec
            .date
            .parse()
            .map_err(|_| bad(format!("bad date {:?}", rec.date)))?;
        let price: f64 = rec
            .adj_close
            .parse()
            .map_err(|_| bad(format!("bad price {:?}", rec.adj_close)))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(bad(format!("price {price} is not positive")));
        }
        if rec.ticker.is_empty() {
            return Err(bad("empty ticker".into()));
        }
        if by_ticker
            .entry(rec.ticker.clone())
            .or_default()
            .insert(date, price)
            .is_some()
        {
            return Err(bad(format!("duplicate row for {} on {date}", rec.ticker)));
        }
        calendar.insert(date);
    }
    let mut out = Vec::new();
    for (ticker, rows) in by_ticker {
        if rows.len() != calendar.len() {
            log::warn!(
                "dropping {ticker}: {} of {} dates missing",
                calendar.len() - rows.len(),
                calendar.len()
            );
            continue;
        }
        let (dates, prices) = rows.into_iter().unzip();
        out.push(PriceSeries::new(&ticker, dates, prices)?);
    }
    if out.is_empty() {
        return Err(DataError::Empty("no ticker has a complete price history".into()));
    }
    Ok(out)
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<Vec<PriceSeries>, DataError> {
    parse_prices(File::open(path.as_ref())?)
}

pub fn write_prices<W: Write>(writer: W, series: &[PriceSeries]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "ticker", "adj_close"])?;
    for s in series {
        for (d, p) in s.dates.iter().zip(&s.prices) {
            w.write_record([d.to_string(), s.ticker.clone(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aligned rows of `(price, s_1, s_2, s_3, s_4)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSeries {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<[f64; CHANNELS]>,
}

impl JointSeries {
    pub fn new(dates: Vec<NaiveDate>, rows: Vec<[f64; CHANNELS]>) -> Result<Self, DataError> {
        if dates.len() != rows.len() {
            return Err(DataError::Invalid(format!(
                "{} dates but {} rows",
                dates.len(),
                rows.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::Invalid("dates not strictly increasing".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite value in joint series".into()));
        }
        Ok(Self { dates, rows })
    }

    /// Pairs each price with that date's source scores. Dates without a
    /// score row get the neutral fill.
    pub fn join(prices: &PriceSeries, daily: &[DailySourceScores]) -> Result<Self, DataError> {
        let by_date: BTreeMap<NaiveDate, &DailySourceScores> =
            daily.iter().map(|d| (d.date, d)).collect();
        let mut missing = 0;
        let mut rows = Vec::with_capacity(prices.len());
        for (date, price) in prices.dates.iter().zip(&prices.prices) {
            let scores = match by_date.get(date) {
                Some(day) => day.scores,
                None => {
                    missing += 1;
                    [NEUTRAL_FILL; SOURCES]
                }
            };
            if let Some(s) = scores.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
                return Err(DataError::Invalid(format!(
                    "score {s} on {date} is outside [-1, 1]"
                )));
            }
            rows.push([*price, scores[0], scores[1], scores[2], scores[3]]);
        }
        if missing > 0 {
            log::warn!("{}: {missing} dates have no score row; using neutral", prices.ticker);
        }
        Self::new(prices.dates.clone(), rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Scores of source `source` (0-based).
    pub fn source(&self, source: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[1 + source]).collect()
    }

    /// Rows `0..end`.
    pub fn head(&self, end: usize) -> JointSeries {
        JointSeries {
            dates: self.dates[..end].to_vec(),
            rows: self.rows[..end].to_vec(),
        }
    }

    /// Same prices with every sentiment channel set to zero.
    pub fn without_news(&self) -> JointSeries {
        JointSeries {
            dates: self.dates.clone(),
            rows: self.rows.iter().map(|r| [r[0], 0.0, 0.0, 0.0, 0.0]).collect(),
        }
    }
}

const JOINT_HEADER: [&str; CHANNELS + 1] =
    ["date", "price", "s_wsj", "s_cnbc", "s_fortune", "s_reuters"];

pub fn write_joint_csv<W: Write>(writer: W, joint: &JointSeries) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(JOINT_HEADER)?;
    for (d, row) in joint.dates.iter().zip(&joint.rows) {
        let mut rec = vec![d.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_joint_csv<R: Read>(reader: R) -> Result<JointSeries, DataError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    if r.headers()?.iter().collect::<Vec<_>>() != JOINT_HEADER {
        return Err(DataError::Parse {
            line: 1,
            reason: format!("expected header {}", JOINT_HEADER.join(",")),
        });
    }
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let bad = |reason: String| DataError::Parse { line, reason };
        if record.len() != JOINT_HEADER.len() {
            return Err(bad(format!("expected {} fields", JOINT_HEADER.len())));
        }
        dates.push(record[0].parse().map_err(|_| bad(format!("bad date {:?}", &record[0])))?);
        let mut row = [0.0; CHANNELS];
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = record[c + 1]
                .parse()
                .map_err(|_| bad(format!("bad number {:?}", &record[c + 1])))?;
        }
        rows.push(row);
    }
    JointSeries::new(dates, rows)
}

pub fn load_joint_csv(path: impl AsRef<Path>) -> Result<JointSeries, DataError> {
    read_joint_csv(File::open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn complete_tickers_kept() {
        let csv = "date,ticker,adj_close\n\
                   2018-01-02,AAA,10\n2018-01-03,AAA,11\n2018-01-04,AAA,12\n\
                   2018-01-04,BBB,5\n2018-01-02,BBB,4\n2018-01-03,BBB,4.5\n";
        let series = parse_prices(csv.as_bytes()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[1].ticker, "BBB");
        assert_eq!(series[1].prices, vec![4.0, 4.5, 5.0]);
        assert_eq!(series[1].dates[0], date("2018-01-02"));
    }

    #[test]
    fn incomplete_ticker_dropped() {
        let csv = "date,ticker,adj_close\n\
                   2018-01-02,AAA,10\n2018-01-03,AAA,11\n2018-01-02,BBB,4\n";
        let series = parse_prices(csv.as_bytes()).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].ticker, "AAA");
    }

    #[test]
    fn empty_after_filtering_is_error() {
        let csv = "date,ticker,adj_close\n2018-01-02,AAA,10\n2018-01-03,BBB,4\n";
        assert!(matches!(parse_prices(csv.as_bytes()), Err(DataError::Empty(_))));
        let csv = "date,ticker,adj_close\n";
        assert!(matches!(parse_prices(csv.as_bytes()), Err(DataError::Empty(_))));
    }

    #[test]
    fn malformed_rows_report_line() {
        let csv = "date,ticker,adj_close\n2018-01-02,AAA,10\n2018-01-03,AAA,-1\n";
        assert!(matches!(parse_prices(csv.as_bytes()), Err(DataError::Parse { line: 3, .. })));
        let csv = "date,ticker,adj_close\n2018-13-02,AAA,10\n";
        assert!(matches!(parse_prices(csv.as_bytes()), Err(DataError::Parse { line: 2, .. })));
        let csv = "day,ticker,close\n2018-01-02,AAA,10\n";
        assert!(matches!(parse_prices(csv.as_bytes()), Err(DataError::Parse { line: 1, .. })));
        let csv = "date,ticker,adj_close\n2018-01-02,AAA,10\n2018-01-02,AAA,11\n";
        assert!(parse_prices(csv.as_bytes()).is_err());
    }

    #[test]
    fn price_csv_round_trip() {
        let s = PriceSeries::new(
            "ZZ",
            vec![date("2018-01-02"), date("2018-01-03")],
            vec![1.0 / 3.0, 2.5],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_prices(&mut buf, std::slice::from_ref(&s)).unwrap();
        assert_eq!(parse_prices(buf.as_slice()).unwrap(), vec![s]);
    }

    #[test]
    fn join_fills_missing_days_neutral() {
        let prices = PriceSeries::new(
            "AAA",
            vec![date("2018-01-02"), date("2018-01-03")],
            vec![10.0, 11.0],
        )
        .unwrap();
        let mut day = DailySourceScores::neutral(date("2018-01-03"));
        day.scores = [0.5, -0.5, 0.25, 0.0];
        let joint = JointSeries::join(&prices, &[day]).unwrap();
        assert_eq!(joint.rows[0], [10.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(joint.rows[1], [11.0, 0.5, -0.5, 0.25, 0.0]);
        assert_eq!(joint.source(1), vec![0.0, -0.5]);
        assert_eq!(joint.without_news().rows[1], [11.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn joint_cache_round_trip() {
        let joint = JointSeries::new(
            vec![date("2018-01-02"), date("2018-01-03")],
            vec![[10.1, 0.1, -0.2, 0.3, 0.7], [9.95, 0.0, 1.0, -1.0, 0.123456789]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_joint_csv(&mut buf, &joint).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,price,s_wsj,s_cnbc,s_fortune,s_reuters\n"));
        assert_eq!(read_joint_csv(buf.as_slice()).unwrap(), joint);
    }
}
