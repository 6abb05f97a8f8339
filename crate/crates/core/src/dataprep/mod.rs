//! Price and score ingestion, rolling windows and noise augmentation.
//!
//! Prices and daily per-source compound scores are joined into a
//! [`JointSeries`] of five-channel rows `(price, s_wsj, s_cnbc, s_fortune,
//! s_reuters)`. [`build_windows`] slices it into stride-1 windows whose price
//! channel is min-max scaled by the window's own input span, so no statistic
//! ever looks past the window it belongs to.
//!
//! ```
//! use newsflow::dataprep::{denormalize, normalize_window};
//!
//! let (scaled, meta) = normalize_window(&[10.0, 20.0, 30.0]).unwrap();
//! assert_eq!(scaled, vec![0.0, 0.5, 1.0]);
//! assert_eq!(denormalize(0.5, meta).unwrap(), 20.0);
//! ```

mod fixture;
mod noise;
mod prices;
mod window;

use thiserror::Error;

pub use fixture::{generate_fixture, Fixture, FixtureConfig, FixtureTruth, TickerTruth};
pub use noise::{add_noise, build_augmented_trainset, estimate_source_variance, NoiseConfig};
pub use prices::{
    load_joint_csv, load_prices, parse_prices, read_joint_csv, write_joint_csv, write_prices,
    JointSeries, PriceSeries,
};
pub use window::{
    build_windows, denormalize, normalize_window, Augmentation, NormMeta, Window, WindowedDataset,
};

/// Channels per row: the price followed by one score per news source.
pub const CHANNELS: usize = 5;
/// Number of news sources.
pub const SOURCES: usize = 4;
pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_SPLIT: f64 = 0.85;
pub const DEFAULT_LAMBDA_NOISE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no usable data: {0}")]
    Empty(String),
    #[error("degenerate window: min {min} is not below max {max}")]
    DegenerateWindow { min: f64, max: f64 },
    #[error("series of length {len} is too short; need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("invalid setting: {0}")]
    Invalid(String),
}

/// Seed for one ticker's pipeline, derived from the run seed and the symbol.
///
/// Hashing the symbol (FNV-1a) rather than using the ticker's position keeps
/// results independent of ticker order and worker count.
pub fn derive_seed(seed: u64, ticker: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in ticker.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix_seed(seed, h)
}

/// SplitMix64 finalizer over `seed ^ salt`.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = (seed ^ salt.rotate_left(17)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
