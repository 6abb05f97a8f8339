//! Synthetic price and news-score corpus with known generating parameters.
//!
//! A latent market mood `m_t` follows an AR(1) process. Each of the four
//! sources reports `m_t` plus independent noise, clamped to `[-1, 1]`. Every
//! ticker's price reverts slowly to a base level and drifts with the previous
//! day's mood:
//!
//! `X_t = base + phi (X_{t-1} - base) + kappa base m_{t-1} + sigma base e_t`
//!
//! In adversarial mode one source is overwritten with `±spike_magnitude` on
//! random days in the last window of the training span, right before the test
//! period. The spikes carry no information about prices.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::window::split_rows;
use super::{derive_seed, mix_seed, write_prices, DataError, PriceSeries, SOURCES};
use crate::neural::NetRng;
use crate::sentiment::{write_daily_scores, DailySourceScores, NewsSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub seed: u64,
    pub tickers: usize,
    /// Trading days (weekdays) to generate.
    pub days: usize,
    pub start: NaiveDate,
    /// Daily mood persistence.
    pub mood_persistence: f64,
    /// Standard deviation of the mood innovations.
    pub mood_noise: f64,
    /// Standard deviation of each source's reporting noise.
    pub source_noise: f64,
    pub price_phi: f64,
    /// Daily drift per unit mood, as a fraction of the base price.
    pub kappa: f64,
    /// Daily price noise, as a fraction of the base price.
    pub sigma: f64,
    /// Probability that a day in the spike region is corrupted; 0 disables.
    pub spike_rate: f64,
    pub spike_source: usize,
    pub spike_magnitude: f64,
    /// Window and split used to place the spike region.
    pub window: usize,
    pub split: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tickers: 3,
            days: 121,
            start: NaiveDate::from_ymd_opt(2017, 12, 7).expect("valid date"),
            mood_persistence: 0.8,
            mood_noise: 0.2,
            source_noise: 0.1,
            price_phi: 0.98,
            kappa: 0.01,
            sigma: 0.002,
            spike_rate: 0.0,
            spike_source: 0,
            spike_magnitude: 0.95,
            window: super::DEFAULT_WINDOW,
            split: super::DEFAULT_SPLIT,
        }
    }
}

impl FixtureConfig {
    /// Default settings with spikes on every other day of the spike region.
    pub fn adversarial(seed: u64) -> Self {
        Self {
            seed,
            spike_rate: 0.5,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if self.tickers == 0 || self.days < 2 {
            return Err(DataError::Invalid("fixture needs a ticker and two days".into()));
        }
        if !unit(self.spike_rate) || !unit(self.spike_magnitude) || self.spike_source >= SOURCES {
            return Err(DataError::Invalid("spike settings out of range".into()));
        }
        if !(self.mood_persistence.abs() < 1.0 && self.price_phi.abs() < 1.0) {
            return Err(DataError::Invalid("persistence must lie in (-1, 1)".into()));
        }
        if ![self.mood_noise, self.source_noise, self.kappa, self.sigma]
            .into_iter()
            .all(nonneg)
        {
            return Err(DataError::Invalid("noise scales must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerTruth {
    pub ticker: String,
    pub base: f64,
    pub phi: f64,
    pub kappa: f64,
    pub sigma: f64,
}

/// Sidecar describing how a fixture was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub config: FixtureConfig,
    pub adversarial: bool,
    pub tickers: Vec<TickerTruth>,
    pub mood: Vec<f64>,
    pub spike_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<PriceSeries>,
    pub daily: Vec<DailySourceScores>,
    /// Demo headlines, one per source and day, worded after that day's score.
    pub news: Vec<(NaiveDate, NewsSource, String)>,
    pub truth: FixtureTruth,
}

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated non-negative scale")
}

pub fn generate_fixture(config: &FixtureConfig) -> Result<Fixture, DataError> {
    config.validate()?;
    let dates = weekdays(config.start, config.days);
    let n = dates.len();

    let mut rng = NetRng::seed_from_u64(mix_seed(config.seed, 0x6d6f_6f64));
    let innovation = normal(config.mood_noise);
    let mut mood = Vec::with_capacity(n);
    let mut m = 0.0f64;
    for _ in 0..n {
        m = (config.mood_persistence * m + innovation.sample(&mut rng)).clamp(-0.95, 0.95);
        mood.push(m);
    }
    let report = normal(config.source_noise);
    let mut daily: Vec<DailySourceScores> = dates
        .iter()
        .zip(&mood)
        .map(|(d, m)| {
            let mut day = DailySourceScores::neutral(*d);
            for k in 0..SOURCES {
                day.scores[k] = (m + report.sample(&mut rng)).clamp(-1.0, 1.0);
                day.counts[k] = 1;
            }
            day
        })
        .collect();

    let mut spike_dates = Vec::new();
    if config.spike_rate > 0.0 {
        let to = split_rows(n, config.window, config.split).unwrap_or(n);
        let from = to.saturating_sub(config.window);
        let mut spikes = NetRng::seed_from_u64(mix_seed(config.seed, 0x7370_696b));
        for day in &mut daily[from..to] {
            if spikes.random_bool(config.spike_rate) {
                let sign = if spikes.random_bool(0.5) { 1.0 } else { -1.0 };
                day.scores[config.spike_source] = sign * config.spike_magnitude;
                spike_dates.push(day.date);
            }
        }
    }

    let mut prices = Vec::with_capacity(config.tickers);
    let mut truths = Vec::with_capacity(config.tickers);
    let shock = normal(1.0);
    for j in 0..config.tickers {
        let ticker = format!("SYN{j:03}");
        let mut trng = NetRng::seed_from_u64(derive_seed(config.seed, &ticker));
        let base = trng.random_range(20.0..200.0);
        let mut x = base * (1.0 + trng.random_range(-0.05..0.05));
        let mut series = Vec::with_capacity(n);
        for t in 0..n {
            if t > 0 {
                x = base
                    + config.price_phi * (x - base)
                    + config.kappa * base * mood[t - 1]
                    + config.sigma * base * shock.sample(&mut trng);
                x = x.max(0.01 * base);
            }
            series.push(x);
        }
        prices.push(PriceSeries::new(&ticker, dates.clone(), series)?);
        truths.push(TickerTruth {
            ticker,
            base,
            phi: config.price_phi,
            kappa: config.kappa,
            sigma: config.sigma,
        });
    }

    let news = daily
        .iter()
        .flat_map(|day| {
            NewsSource::ALL
                .into_iter()
                .map(move |s| (day.date, s, headline(day.scores[s.index()], day.date.ordinal() as usize + s.index())))
        })
        .collect();

    Ok(Fixture {
        dates,
        prices,
        daily,
        news,
        truth: FixtureTruth {
            config: config.clone(),
            adversarial: !spike_dates.is_empty(),
            tickers: truths,
            mood,
            spike_dates,
        },
    })
}

const UP: [&str; 8] = ["rally", "gains", "strong", "surge", "profit", "upgrade", "rebound", "optimism"];
const DOWN: [&str; 8] = ["slump", "losses", "weak", "plunge", "fears", "downgrade", "selloff", "concerns"];
const SUBJECTS: [&str; 4] = ["Stocks", "Shares", "Markets", "Equities"];

/// Headline whose lexicon words lean with `score`; `salt` varies the wording.
fn headline(score: f64, salt: usize) -> String {
    let subject = SUBJECTS[salt % SUBJECTS.len()];
    let words = (score.abs() * 3.0).round() as usize;
    if words == 0 {
        return format!("{subject} steady as traders await data");
    }
    let pool = if score > 0.0 { &UP } else { &DOWN };
    let picked: Vec<&str> = (0..words).map(|k| pool[(salt + 3 * k) % pool.len()]).collect();
    format!("{subject} see {}", picked.join(" and "))
}

impl Fixture {
    /// Writes `prices.csv`, `scores.csv`, `news.ndjson` and `truth.json`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<(), DataError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("prices.csv"))?);
        write_prices(&mut w, &self.prices)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("scores.csv"))?);
        write_daily_scores(&mut w, &self.daily)
            .map_err(|e| DataError::Invalid(format!("writing scores: {e}")))?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("news.ndjson"))?);
        for (date, source, title) in &self.news {
            let record = serde_json::json!({
                "published": date.to_string(),
                "site": format!("{}.com", source.label()),
                "title": title,
            });
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("truth.json"))?);
        serde_json::to_writer_pretty(&mut w, &self.truth)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::parse_prices;
    use crate::sentiment::{aggregate_daily, parse_news, Lexicon};

    #[test]
    fn default_shape() {
        let f = generate_fixture(&FixtureConfig::default()).unwrap();
        assert_eq!(f.dates.len(), 121);
        assert_eq!(f.prices.len(), 3);
        assert!(f.prices.iter().all(|p| p.len() == 121));
        assert!(f.dates.iter().all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
        assert!(!f.truth.adversarial);
        assert!(f.truth.spike_dates.is_empty());
        for day in &f.daily {
            assert!(day.scores.iter().all(|s| (-1.0..=1.0).contains(s)));
        }
    }

    #[test]
    fn many_tickers_share_calendar() {
        let config = FixtureConfig {
            tickers: 451,
            ..FixtureConfig::default()
        };
        let f = generate_fixture(&config).unwrap();
        let mut buf = Vec::new();
        write_prices(&mut buf, &f.prices).unwrap();
        let parsed = parse_prices(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 451);
        assert!(parsed.iter().all(|s| s.len() == 121));
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let config = FixtureConfig::adversarial(5);
        generate_fixture(&config).unwrap().write_to(dir_a.path()).unwrap();
        generate_fixture(&config).unwrap().write_to(dir_b.path()).unwrap();
        for name in ["prices.csv", "scores.csv", "news.ndjson", "truth.json"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
        let other = generate_fixture(&FixtureConfig::adversarial(6)).unwrap();
        assert_ne!(other.prices, generate_fixture(&config).unwrap().prices);
    }

    #[test]
    fn spikes_confined_to_last_training_window() {
        let config = FixtureConfig::adversarial(1);
        let f = generate_fixture(&config).unwrap();
        assert!(f.truth.adversarial);
        let (first, test_start) = (f.dates[102 - 10], f.dates[102]);
        assert!(!f.truth.spike_dates.is_empty());
        assert!(f.truth.spike_dates.iter().all(|d| *d >= first && *d < test_start));
        for day in &f.daily {
            if f.truth.spike_dates.contains(&day.date) {
                assert_eq!(day.scores[0].abs(), 0.95);
            }
        }
    }

    #[test]
    fn headlines_score_with_the_day() {
        let f = generate_fixture(&FixtureConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        f.write_to(dir.path()).unwrap();
        let corpus = parse_news(File::open(dir.path().join("news.ndjson")).unwrap()).unwrap();
        assert_eq!(corpus.items.len(), 4 * 121);
        let scored = aggregate_daily(&corpus.items, &Lexicon::demo(), &f.dates);
        for (got, truth) in scored.iter().zip(&f.daily) {
            for k in 0..SOURCES {
                let t = truth.scores[k];
                if (t.abs() * 3.0).round() == 0.0 {
                    assert_eq!(got.scores[k], 0.0);
                } else {
                    assert_eq!(got.scores[k].signum(), t.signum());
                }
            }
        }
    }

    #[test]
    fn invalid_settings_rejected() {
        for bad in [
            FixtureConfig { tickers: 0, ..FixtureConfig::default() },
            FixtureConfig { spike_rate: 1.5, ..FixtureConfig::default() },
            FixtureConfig { spike_source: 4, ..FixtureConfig::default() },
            FixtureConfig { price_phi: 1.0, ..FixtureConfig::default() },
        ] {
            assert!(generate_fixture(&bad).is_err());
        }
    }
}
