//! Per-window min-max scaling and the rolling-window split.

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DataError, JointSeries, CHANNELS};
use crate::neural::Example;

/// Bounds of the price channel over a window's input span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub min: f64,
    pub max: f64,
}

impl NormMeta {
    pub fn new(min: f64, max: f64) -> Result<Self, DataError> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(DataError::DegenerateWindow { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn from_values(values: &[f64]) -> Result<Self, DataError> {
        if values.is_empty() {
            return Err(DataError::Empty("window has no values".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(min, max)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        x * (self.max - self.min) + self.min
    }
}

/// Scales `values` into `[0, 1]` by their own min and max.
pub fn normalize_window(values: &[f64]) -> Result<(Vec<f64>, NormMeta), DataError> {
    let meta = NormMeta::from_values(values)?;
    Ok((values.iter().map(|&x| meta.normalize(x)).collect(), meta))
}

pub fn denormalize(value: f64, meta: NormMeta) -> Result<f64, DataError> {
    NormMeta::new(meta.min, meta.max)?;
    Ok(meta.denormalize(value))
}

/// Which copy of the data a window was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Augmentation {
    Clean,
    /// Source index (0-based) that received noise.
    NoiseSource(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// `p` rows of `CHANNELS` values, row-major; price channel scaled.
    pub input: Vec<f64>,
    /// Next price scaled with `meta`; may fall outside `[0, 1]`.
    pub target: f64,
    pub meta: NormMeta,
    pub start: NaiveDate,
    pub target_date: NaiveDate,
    pub tag: Augmentation,
}

impl Window {
    pub fn steps(&self) -> usize {
        self.input.len() / CHANNELS
    }

    pub fn target_price(&self) -> f64 {
        self.meta.denormalize(self.target)
    }

    pub fn last_price(&self) -> f64 {
        self.meta.denormalize(self.input[self.input.len() - CHANNELS])
    }
}

impl Example for Window {
    fn features(&self) -> &[f64] {
        &self.input
    }

    fn target(&self) -> f64 {
        self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub window: usize,
    /// Rows of the joint series that form the training span.
    pub train_rows: usize,
    pub train: Vec<Window>,
    pub test: Vec<Window>,
}

pub(crate) fn check_window_args(p: usize, split: f64) -> Result<(), DataError> {
    if p == 0 {
        return Err(DataError::Invalid("window size must be at least 1".into()));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(DataError::Invalid(format!("split {split} must lie in (0, 1)")));
    }
    Ok(())
}

/// Number of rows in the training span; checks both spans can hold a window.
pub(crate) fn split_rows(len: usize, p: usize, split: f64) -> Result<usize, DataError> {
    check_window_args(p, split)?;
    let train_rows = (split * len as f64).floor() as usize;
    if train_rows < p + 1 || len - train_rows < p + 1 {
        let fits = |n: usize| {
            let t = (split * n as f64).floor() as usize;
            t > p && n - t > p
        };
        let needed = (2 * (p + 1)..).find(|&n| fits(n)).unwrap_or(usize::MAX);
        return Err(DataError::SeriesTooShort { len, needed });
    }
    Ok(train_rows)
}

/// Stride-1 windows whose inputs and target all lie in `rows`.
pub(crate) fn windows_in(
    joint: &JointSeries,
    rows: Range<usize>,
    p: usize,
    tag: Augmentation,
) -> Result<Vec<Window>, DataError> {
    let mut out = Vec::with_capacity(rows.len().saturating_sub(p));
    for t in rows.start..rows.end.saturating_sub(p) {
        let span = &joint.rows[t..t + p];
        let prices: Vec<f64> = span.iter().map(|r| r[0]).collect();
        let meta = NormMeta::from_values(&prices).map_err(|e| match e {
            DataError::DegenerateWindow { .. } => DataError::Invalid(format!(
                "window starting {} has a constant price",
                joint.dates[t]
            )),
            other => other,
        })?;
        let mut input = Vec::with_capacity(p * CHANNELS);
        for row in span {
            input.push(meta.normalize(row[0]));
            input.extend_from_slice(&row[1..]);
        }
        out.push(Window {
            input,
            target: meta.normalize(joint.rows[t + p][0]),
            meta,
            start: joint.dates[t],
            target_date: joint.dates[t + p],
            tag,
        });
    }
    Ok(out)
}

/// Splits `joint` chronologically and cuts stride-1 windows of `p` rows.
///
/// The first `floor(split * len)` dates form the training span and the rest
/// the test span. Windows never straddle the boundary, so every test input
/// postdates every training target. Each span of `m` rows yields `m - p`
/// windows.
pub fn build_windows(joint: &JointSeries, p: usize, split: f64) -> Result<WindowedDataset, DataError> {
    let train_rows = split_rows(joint.len(), p, split)?;
    Ok(WindowedDataset {
        window: p,
        train_rows,
        train: windows_in(joint, 0..train_rows, p, Augmentation::Clean)?,
        test: windows_in(joint, train_rows..joint.len(), p, Augmentation::Clean)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;

    fn joint_from_prices(prices: &[f64]) -> JointSeries {
        let start: NaiveDate = "2018-01-01".parse().unwrap();
        let dates = (0..prices.len())
            .map(|k| start + Days::new(k as u64))
            .collect();
        let rows = prices
            .iter()
            .enumerate()
            .map(|(k, &p)| [p, 0.1 * (k % 3) as f64, -0.2, 0.0, 0.5])
            .collect();
        JointSeries::new(dates, rows).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let (scaled, meta) = normalize_window(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(scaled, vec![0.0, 0.5, 1.0]);
        assert_eq!(meta, NormMeta { min: 10.0, max: 30.0 });
        assert!(matches!(
            normalize_window(&[5.0, 5.0, 5.0]),
            Err(DataError::DegenerateWindow { .. })
        ));
        assert_eq!(denormalize(0.5, meta).unwrap(), 20.0);
        assert_eq!(denormalize(0.0, NormMeta { min: 3.0, max: 7.0 }).unwrap(), 3.0);
        assert!(denormalize(0.0, NormMeta { min: 3.0, max: 3.0 }).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(1.0f64..500.0, 2..20)) {
            prop_assume!(values.iter().any(|v| *v != values[0]));
            let (scaled, meta) = normalize_window(&values).unwrap();
            for (s, v) in scaled.iter().zip(&values) {
                prop_assert!((0.0..=1.0).contains(s));
                prop_assert!((meta.denormalize(*s) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_counts_for_full_span() {
        let prices: Vec<f64> = (0..121).map(|k| 100.0 + (k as f64 * 0.7).sin() * 5.0).collect();
        let ds = build_windows(&joint_from_prices(&prices), 10, 0.85).unwrap();
        assert_eq!(ds.train_rows, 102);
        assert_eq!(ds.train.len(), 92);
        assert_eq!(ds.test.len(), 9);
        assert_eq!(ds.train.len() + ds.test.len() + 2 * 10, 121);
    }

    #[test]
    fn smallest_splittable_series() {
        // 22 rows at split 0.5: two spans of 11 rows, one window each
        let prices: Vec<f64> = (0..22).map(|k| 10.0 + k as f64).collect();
        let ds = build_windows(&joint_from_prices(&prices), 10, 0.5).unwrap();
        assert_eq!((ds.train.len(), ds.test.len()), (1, 1));
        assert_eq!(ds.train[0].target_date, ds.train[0].start + Days::new(10));
        let short = joint_from_prices(&prices[..21]);
        assert!(matches!(
            build_windows(&short, 10, 0.5),
            Err(DataError::SeriesTooShort { len: 21, .. })
        ));
        assert!(build_windows(&joint_from_prices(&prices[..12]), 10, 0.85).is_err());
    }

    #[test]
    fn window_contents() {
        let prices: Vec<f64> = (0..30).map(|k| 50.0 + (k * k % 7) as f64).collect();
        let joint = joint_from_prices(&prices);
        let ds = build_windows(&joint, 4, 0.5).unwrap();
        let w = &ds.train[2];
        let span = &prices[2..6];
        let min = span.iter().copied().fold(f64::INFINITY, f64::min);
        let max = span.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(w.meta, NormMeta { min, max });
        for (step, row) in w.input.chunks(CHANNELS).enumerate() {
            assert_eq!(row[0], (span[step] - min) / (max - min));
            assert_eq!(&row[1..], &joint.rows[2 + step][1..]);
        }
        assert_eq!(w.target, (prices[6] - min) / (max - min));
        assert!((w.target_price() - prices[6]).abs() < 1e-12);
        assert_eq!(w.last_price(), prices[5]);
        assert_eq!(w.steps(), 4);
    }

    #[test]
    fn no_chronological_leakage() {
        let prices: Vec<f64> = (0..60).map(|k| 20.0 + (k as f64).cos()).collect();
        let ds = build_windows(&joint_from_prices(&prices), 5, 0.7).unwrap();
        let last_train = ds.train.iter().map(|w| w.target_date).max().unwrap();
        let first_test = ds.test.iter().map(|w| w.start).min().unwrap();
        assert!(last_train < first_test);
        for w in ds.train.iter().chain(&ds.test) {
            for row in w.input.chunks(CHANNELS) {
                assert!((0.0..=1.0).contains(&row[0]));
            }
            assert!(w.meta.max > w.meta.min);
        }
    }

    #[test]
    fn constant_window_rejected() {
        let mut prices: Vec<f64> = (0..40).map(|k| 10.0 + k as f64).collect();
        for p in &mut prices[3..8] {
            *p = 7.0;
        }
        assert!(build_windows(&joint_from_prices(&prices), 4, 0.5).is_err());
    }

    #[test]
    fn bad_arguments() {
        let joint = joint_from_prices(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(build_windows(&joint, 0, 0.5).is_err());
        assert!(build_windows(&joint, 2, 1.0).is_err());
        assert!(build_windows(&joint, 2, 0.0).is_err());
    }
}
