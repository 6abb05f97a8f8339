//! Forecast metrics on de-normalized prices.
//!
//! The mean prediction accuracy of a day is one minus the average relative
//! absolute error across the stocks predicted that day. [`evaluate`] averages
//! it over days and adds MSE, mean error percent and accuracy computed over
//! every predicted point.
//!
//! ```
//! use newsflow::eval::{mpa, PredictionTrack};
//!
//! let day = "2018-05-01".parse().unwrap();
//! let mut track = PredictionTrack::new("demo");
//! track.push("AAA", day, 100.0, Some(90.0)).unwrap();
//! track.push("BBB", day, 200.0, Some(220.0)).unwrap();
//! assert!((mpa(&track, day).unwrap() - 0.9).abs() < 1e-12);
//! ```

mod compare;
mod plot;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare, Comparison, ComparisonRow, METRIC_NAMES};
pub use plot::{emit_plot_data, line_chart_svg, write_prediction_csv, write_sentiment_csv, Series};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("no predictions on {0}")]
    NoData(NaiveDate),
    #[error("{ticker} on {date}: real price {price} is not positive")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        price: f64,
    },
    #[error("{ticker} on {date}: non-finite prediction {value}")]
    NonFinite {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },
    #[error("duplicate point for {ticker} on {date}")]
    DuplicatePoint { ticker: String, date: NaiveDate },
    #[error("expected a single series, found {0}")]
    NotSingleSeries(usize),
    #[error("duplicate report label {0:?}")]
    DuplicateLabel(String),
    #[error("need at least two reports, got {0}")]
    TooFewReports(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Real and predicted price of one stock on one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub real: f64,
    /// `None` when the method produced no forecast for this point.
    pub predicted: Option<f64>,
}

/// One method's forecasts, keyed by date and then ticker.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionTrack {
    pub method: String,
    days: BTreeMap<NaiveDate, BTreeMap<String, TrackPoint>>,
}

impl PredictionTrack {
    pub fn new(method: &str) -> Self {
        Self {
            method: method.to_string(),
            days: BTreeMap::new(),
        }
    }

    pub fn push(
        &mut self,
        ticker: &str,
        date: NaiveDate,
        real: f64,
        predicted: Option<f64>,
    ) -> Result<(), EvalError> {
        if !(real.is_finite() && real > 0.0) {
            return Err(EvalError::NonPositivePrice {
                ticker: ticker.to_string(),
                date,
                price: real,
            });
        }
        if let Some(p) = predicted.filter(|p| !p.is_finite()) {
            return Err(EvalError::NonFinite {
                ticker: ticker.to_string(),
                date,
                value: p,
            });
        }
        let day = self.days.entry(date).or_default();
        if day.contains_key(ticker) {
            return Err(EvalError::DuplicatePoint {
                ticker: ticker.to_string(),
                date,
            });
        }
        day.insert(ticker.to_string(), TrackPoint { real, predicted });
        Ok(())
    }

    /// Adds every point of `other`, which must not overlap this track.
    pub fn extend(&mut self, other: &PredictionTrack) -> Result<(), EvalError> {
        for (date, ticker, point) in other.points() {
            self.push(ticker, date, point.real, point.predicted)?;
        }
        Ok(())
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days.keys().copied().collect()
    }

    pub fn tickers(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .days
            .values()
            .flat_map(|d| d.keys().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    }

    /// Points in date order, then ticker order.
    pub fn points(&self) -> impl Iterator<Item = (NaiveDate, &str, &TrackPoint)> {
        self.days
            .iter()
            .flat_map(|(d, day)| day.iter().map(move |(t, p)| (*d, t.as_str(), p)))
    }

    pub fn get(&self, ticker: &str, date: NaiveDate) -> Option<&TrackPoint> {
        self.days.get(&date).and_then(|d| d.get(ticker))
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Number of (ticker, date) points, predicted or not.
    pub fn len(&self) -> usize {
        self.days.values().map(|d| d.len()).sum()
    }
}

fn relative_error(p: &TrackPoint) -> Option<f64> {
    p.predicted.map(|x| (p.real - x).abs() / p.real)
}

/// Mean prediction accuracy on `date` over the stocks predicted that day.
pub fn mpa(track: &PredictionTrack, date: NaiveDate) -> Result<f64, EvalError> {
    let day = track.days.get(&date).ok_or(EvalError::NoData(date))?;
    let errors: Vec<f64> = day.values().filter_map(relative_error).collect();
    if errors.is_empty() {
        return Err(EvalError::NoData(date));
    }
    Ok(1.0 - errors.iter().sum::<f64>() / errors.len() as f64)
}

/// MPA of every day that has at least one prediction.
pub fn per_day_mpa(track: &PredictionTrack) -> Vec<(NaiveDate, f64)> {
    let mut out = Vec::with_capacity(track.days.len());
    for (date, day) in &track.days {
        let missing = day.values().filter(|p| p.predicted.is_none()).count();
        match mpa(track, *date) {
            Ok(v) => {
                if missing > 0 {
                    log::warn!(
                        "{}: {missing} of {} stocks lack a prediction on {date}",
                        track.method,
                        day.len()
                    );
                }
                out.push((*date, v));
            }
            Err(_) => log::warn!("{}: no predictions on {date}; day skipped", track.method),
        }
    }
    out
}

/// Mean of [`per_day_mpa`] over the evaluable days.
pub fn mean_mpa(track: &PredictionTrack) -> Result<f64, EvalError> {
    let days = per_day_mpa(track);
    if days.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(days.iter().map(|(_, v)| v).sum::<f64>() / days.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub mean_mpa: f64,
    pub per_day_mpa: Vec<f64>,
    pub days: Vec<NaiveDate>,
    /// Mean squared error in squared price units.
    pub mse: f64,
    pub accuracy: f64,
    pub mean_error_percent: f64,
    /// Predicted points behind `mse` and `mean_error_percent`.
    pub points: usize,
}

/// Metrics over every predicted point of `track`.
pub fn evaluate(track: &PredictionTrack) -> Result<EvalReport, EvalError> {
    let mut sq = 0.0;
    let mut rel = 0.0;
    let mut n = 0usize;
    for (_, _, p) in track.points() {
        if let (Some(x), Some(r)) = (p.predicted, relative_error(p)) {
            sq += (p.real - x) * (p.real - x);
            rel += r;
            n += 1;
        }
    }
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let missing = track.len() - n;
    if missing > 0 {
        log::warn!("{}: {missing} points without a prediction excluded", track.method);
    }
    let days = per_day_mpa(track);
    let mean_error_percent = rel / n as f64;
    Ok(EvalReport {
        method: track.method.clone(),
        mean_mpa: days.iter().map(|(_, v)| v).sum::<f64>() / days.len() as f64,
        per_day_mpa: days.iter().map(|(_, v)| *v).collect(),
        days: days.iter().map(|(d, _)| *d).collect(),
        mse: sq / n as f64,
        accuracy: 1.0 - mean_error_percent,
        mean_error_percent,
        points: n,
    })
}

/// [`evaluate`] restricted to a track holding a single series.
pub fn index_metrics(track: &PredictionTrack) -> Result<EvalReport, EvalError> {
    let tickers = track.tickers();
    if tickers.len() > 1 {
        return Err(EvalError::NotSingleSeries(tickers.len()));
    }
    evaluate(track)
}
