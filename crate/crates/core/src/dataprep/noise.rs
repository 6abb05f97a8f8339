//! Gaussian noise on one news source at a time.
//!
//! Each training copy perturbs a single source with draws from
//! `N(0, lambda_n * var(S_i))`, where the variance comes from training dates
//! only. Noised scores are left unclamped.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::window::{split_rows, windows_in};
use super::{mix_seed, Augmentation, DataError, JointSeries, WindowedDataset, SOURCES};
use crate::neural::NetRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub lambda_n: f64,
    pub seed: u64,
    /// Training-span variance of each source.
    pub variances: [f64; SOURCES],
}

impl NoiseConfig {
    pub fn new(lambda_n: f64, seed: u64, variances: [f64; SOURCES]) -> Result<Self, DataError> {
        if !(lambda_n.is_finite() && lambda_n >= 0.0) {
            return Err(DataError::Invalid(format!("lambda_n {lambda_n} must be non-negative")));
        }
        if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(DataError::Invalid(format!("variance {v} must be non-negative")));
        }
        Ok(Self {
            lambda_n,
            seed,
            variances,
        })
    }

    /// Estimates every source's variance over the first `train_rows` rows.
    pub fn estimate(
        joint: &JointSeries,
        train_rows: usize,
        lambda_n: f64,
        seed: u64,
    ) -> Result<Self, DataError> {
        let mut variances = [0.0; SOURCES];
        for (i, v) in variances.iter_mut().enumerate() {
            *v = estimate_source_variance(joint, i, train_rows)?;
        }
        Self::new(lambda_n, seed, variances)
    }
}

/// Population variance of source `source` over rows `0..train_rows`.
pub fn estimate_source_variance(
    joint: &JointSeries,
    source: usize,
    train_rows: usize,
) -> Result<f64, DataError> {
    if source >= SOURCES {
        return Err(DataError::Invalid(format!("no source {source}")));
    }
    if train_rows < 2 || train_rows > joint.len() {
        return Err(DataError::SeriesTooShort {
            len: train_rows.min(joint.len()),
            needed: 2,
        });
    }
    let values: Vec<f64> = joint.rows[..train_rows].iter().map(|r| r[1 + source]).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Copy of `span` with i.i.d. noise added to source `source` on every row.
///
/// The generator is seeded from `config.seed` and the source index, so the
/// same config always yields the same copy. With zero noise variance the
/// copy is bitwise equal to the input.
pub fn add_noise(
    span: &JointSeries,
    source: usize,
    config: &NoiseConfig,
) -> Result<JointSeries, DataError> {
    NoiseConfig::new(config.lambda_n, config.seed, config.variances)?;
    if source >= SOURCES {
        return Err(DataError::Invalid(format!("no source {source}")));
    }
    let mut out = span.clone();
    let var = config.lambda_n * config.variances[source];
    if var == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, var.sqrt())
        .map_err(|e| DataError::Invalid(format!("noise distribution: {e}")))?;
    let mut rng = NetRng::seed_from_u64(mix_seed(config.seed, source as u64 + 1));
    for row in &mut out.rows {
        row[1 + source] += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Windows from four noised training copies plus a clean test set.
///
/// The training span is noised once per source before windowing, giving
/// four times as many training windows as [`super::build_windows`].
pub fn build_augmented_trainset(
    joint: &JointSeries,
    p: usize,
    split: f64,
    lambda_n: f64,
    seed: u64,
) -> Result<WindowedDataset, DataError> {
    let train_rows = split_rows(joint.len(), p, split)?;
    let config = NoiseConfig::estimate(joint, train_rows, lambda_n, seed)?;
    let train_span = joint.head(train_rows);
    let mut train = Vec::with_capacity(SOURCES * (train_rows - p));
    for source in 0..SOURCES {
        let noisy = add_noise(&train_span, source, &config)?;
        train.extend(windows_in(&noisy, 0..train_rows, p, Augmentation::NoiseSource(source))?);
    }
    Ok(WindowedDataset {
        window: p,
        train_rows,
        train,
        test: windows_in(joint, train_rows..joint.len(), p, Augmentation::Clean)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::build_windows;
    use chrono::{Days, NaiveDate};
    use rand::Rng;

    fn random_joint(n: usize, seed: u64) -> JointSeries {
        let mut rng = NetRng::seed_from_u64(seed);
        let start: NaiveDate = "2018-01-01".parse().unwrap();
        let dates = (0..n).map(|k| start + Days::new(k as u64)).collect();
        let mut price = 100.0;
        let rows = (0..n)
            .map(|_| {
                price += rng.random_range(-1.0..1.0);
                [
                    price,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.2..0.9),
                    rng.random_range(-1.0..0.0),
                ]
            })
            .collect();
        JointSeries::new(dates, rows).unwrap()
    }

    #[test]
    fn variance_examples() {
        let mut joint = random_joint(4, 1);
        for (k, row) in joint.rows.iter_mut().enumerate() {
            row[1] = 0.3;
            row[2] = if k % 2 == 0 { -0.5 } else { 0.5 };
        }
        assert_eq!(estimate_source_variance(&joint, 0, 4).unwrap(), 0.0);
        assert_eq!(estimate_source_variance(&joint, 1, 2).unwrap(), 0.25);
        assert!(estimate_source_variance(&joint, 1, 1).is_err());
        assert!(estimate_source_variance(&joint, 1, 5).is_err());
        assert!(estimate_source_variance(&joint, 4, 3).is_err());
    }

    #[test]
    fn variance_matches_brute_force() {
        let joint = random_joint(100, 2);
        for i in 0..SOURCES {
            let xs: Vec<f64> = joint.rows.iter().map(|r| r[1 + i]).collect();
            let mut mean = 0.0;
            for x in &xs {
                mean += x;
            }
            mean /= 100.0;
            let mut acc = 0.0;
            for x in &xs {
                acc += (x - mean).powi(2);
            }
            let got = estimate_source_variance(&joint, i, 100).unwrap();
            assert!((got - acc / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn variance_ignores_test_rows() {
        let mut joint = random_joint(50, 3);
        let before = estimate_source_variance(&joint, 0, 30).unwrap();
        for row in &mut joint.rows[30..] {
            row[1] = 50.0;
        }
        assert_eq!(estimate_source_variance(&joint, 0, 30).unwrap(), before);
    }

    #[test]
    fn zero_lambda_is_identity() {
        let joint = random_joint(30, 4);
        let config = NoiseConfig::estimate(&joint, 30, 0.0, 9).unwrap();
        for i in 0..SOURCES {
            assert_eq!(add_noise(&joint, i, &config).unwrap(), joint);
        }
    }

    #[test]
    fn only_target_channel_changes() {
        let joint = random_joint(40, 5);
        let config = NoiseConfig::estimate(&joint, 40, 0.5, 9).unwrap();
        for i in 0..SOURCES {
            let noisy = add_noise(&joint, i, &config).unwrap();
            assert_eq!(noisy, add_noise(&joint, i, &config).unwrap());
            for (a, b) in noisy.rows.iter().zip(&joint.rows) {
                for c in 0..5 {
                    if c == 1 + i {
                        assert_ne!(a[c], b[c]);
                    } else {
                        assert_eq!(a[c].to_bits(), b[c].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        let joint = random_joint(10, 6);
        assert!(NoiseConfig::estimate(&joint, 10, -0.1, 0).is_err());
        let bad = NoiseConfig {
            lambda_n: -1.0,
            seed: 0,
            variances: [0.1; 4],
        };
        assert!(add_noise(&joint, 0, &bad).is_err());
    }

    #[test]
    fn augmented_counts_and_tags() {
        let joint = random_joint(121, 7);
        let clean = build_windows(&joint, 10, 0.85).unwrap();
        let aug = build_augmented_trainset(&joint, 10, 0.85, 0.1, 3).unwrap();
        assert_eq!(clean.train.len(), 92);
        assert_eq!(aug.train.len(), 368);
        assert_eq!(aug.test, clean.test);
        for (k, w) in aug.train.iter().enumerate() {
            assert_eq!(w.tag, Augmentation::NoiseSource(k / 92));
            let c = &clean.train[k % 92];
            assert_eq!(w.target, c.target);
            for (step, (a, b)) in w.input.chunks(5).zip(c.input.chunks(5)).enumerate() {
                for ch in 0..5 {
                    if ch != 1 + k / 92 {
                        assert_eq!(a[ch], b[ch], "window {k} step {step} channel {ch}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_lambda_augmentation_duplicates() {
        let joint = random_joint(60, 8);
        let clean = build_windows(&joint, 5, 0.8).unwrap();
        let aug = build_augmented_trainset(&joint, 5, 0.8, 0.0, 3).unwrap();
        let n = clean.train.len();
        for (k, w) in aug.train.iter().enumerate() {
            assert_eq!(w.input, clean.train[k % n].input);
        }
    }
}
