//! The `score` and `fixture` commands.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::Serialize;

use super::{PipelineError, Stage};
use crate::dataprep::{generate_fixture, load_prices, Fixture, FixtureConfig};
use crate::sentiment::{
    aggregate_daily, load_lexicon, load_news, word_frequency, write_daily_scores,
    write_word_frequency, Lexicon, NewsSource, Polarity, DEFAULT_STOP_WORDS,
};

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    pub news: PathBuf,
    /// The bundled demo lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Trading dates; weekdays spanning the corpus when absent.
    pub calendar: Option<PathBuf>,
    pub out: PathBuf,
    /// Also write the most frequent positive and negative title words here.
    pub word_freq: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub articles: usize,
    pub per_source: [usize; 4],
    pub skipped_unknown_site: usize,
    pub skipped_empty_title: usize,
    pub days: usize,
}

impl fmt::Display for ScoreSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "articles: {}", self.articles)?;
        for s in NewsSource::ALL {
            writeln!(f, "  {:<8} {}", s.label(), self.per_source[s.index()])?;
        }
        writeln!(f, "skipped (unknown site): {}", self.skipped_unknown_site)?;
        writeln!(f, "skipped (empty title): {}", self.skipped_empty_title)?;
        write!(f, "trading days written: {}", self.days)
    }
}

/// Reads trading dates from either a price CSV (`date,ticker,adj_close`) or
/// a file with one ISO date per line and an optional `date` header.
pub fn load_calendar(path: impl AsRef<Path>) -> Result<Vec<NaiveDate>, PipelineError> {
    let path = path.as_ref();
    let stage = format!("calendar {}", path.display());
    let text = fs::read_to_string(path).stage(&stage)?;
    let first = text.lines().next().unwrap_or("").trim();
    if first.starts_with("date,ticker") {
        let series = load_prices(path).stage(&stage)?;
        return Ok(series[0].dates.clone());
    }
    let mut dates = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || (k == 0 && field == "date") {
            continue;
        }
        let date: NaiveDate = field
            .parse()
            .map_err(|_| PipelineError::new(&stage, format!("line {}: bad date {field:?}", k + 1)))?;
        dates.push(date);
    }
    dates.sort();
    dates.dedup();
    Ok(dates)
}

fn weekdays_between(first: NaiveDate, last: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = first;
    while d <= last {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Scores every title, averages per trading day and source, and writes the
/// daily CSV to `options.out`.
pub fn cmd_score(options: &ScoreOptions) -> Result<ScoreSummary, PipelineError> {
    let lexicon = match &options.lexicon {
        Some(p) => load_lexicon(p).stage(&format!("lexicon {}", p.display()))?,
        None => Lexicon::demo(),
    };
    let corpus = load_news(&options.news).stage(&format!("news {}", options.news.display()))?;
    if corpus.items.is_empty() {
        log::warn!("news corpus has no usable articles; every day will be neutral");
    }
    let calendar = match &options.calendar {
        Some(p) => load_calendar(p)?,
        None => {
            let first = corpus.items.iter().map(|i| i.published).min();
            let last = corpus.items.iter().map(|i| i.published).max();
            match (first, last) {
                (Some(a), Some(b)) => weekdays_between(a, b),
                _ => Vec::new(),
            }
        }
    };
    let daily = aggregate_daily(&corpus.items, &lexicon, &calendar);
    if let Some(dir) = options.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).stage("write scores")?;
    }
    let mut w = BufWriter::new(File::create(&options.out).stage("write scores")?);
    write_daily_scores(&mut w, &daily).stage("write scores")?;
    w.flush().stage("write scores")?;

    if let Some(path) = &options.word_freq {
        let mut w = BufWriter::new(File::create(path).stage("write word counts")?);
        let mut rows = Vec::new();
        for polarity in [Polarity::Positive, Polarity::Negative] {
            rows.extend(
                word_frequency(&corpus.items, &lexicon, polarity, DEFAULT_STOP_WORDS)
                    .into_iter()
                    .take(20),
            );
        }
        write_word_frequency(&mut w, &rows).stage("write word counts")?;
        w.flush().stage("write word counts")?;
    }

    Ok(ScoreSummary {
        articles: corpus.items.len(),
        per_source: corpus.counts_by_source(),
        skipped_unknown_site: corpus.skipped_unknown_site,
        skipped_empty_title: corpus.skipped_empty_title,
        days: daily.len(),
    })
}

/// Generates a synthetic corpus and writes it under `out`.
pub fn cmd_fixture(config: &FixtureConfig, out: impl AsRef<Path>) -> Result<Fixture, PipelineError> {
    let fixture = generate_fixture(config).stage("generate fixture")?;
    fixture.write_to(out).stage("write fixture")?;
    Ok(fixture)
}
