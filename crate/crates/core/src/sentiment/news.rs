//! News corpus ingestion, per-day per-source aggregation and word counts.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{score_text, tokenize, Lexicon, SentimentError};

/// Score used for a (day, source) cell with no articles.
pub const NEUTRAL_FILL: f64 = 0.0;

/// Stop words excluded from [`word_frequency`] unless the caller supplies a list.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "an", "and", "are", "as", "at", "be", "by", "can", "for",
    "from", "has", "have", "how", "in", "into", "is", "it", "its", "new", "of", "on", "or",
    "over", "s", "says", "than", "that", "the", "their", "this", "to", "up", "us", "was", "what",
    "when", "who", "why", "will", "with", "you",
];

/// The four publishers, in the column order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NewsSource {
    Wsj,
    Cnbc,
    Fortune,
    Reuters,
}

impl NewsSource {
    pub const ALL: [NewsSource; 4] = [
        NewsSource::Wsj,
        NewsSource::Cnbc,
        NewsSource::Fortune,
        NewsSource::Reuters,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            NewsSource::Wsj => "wsj",
            NewsSource::Cnbc => "cnbc",
            NewsSource::Fortune => "fortune",
            NewsSource::Reuters => "reuters",
        }
    }

    /// Maps a site string such as `www.reuters.com` or `CNBC` to a source.
    pub fn from_site(site: &str) -> Option<Self> {
        let site = site.trim().to_ascii_lowercase();
        let site = site
            .trim_start_matches("https://")
            .trim_start_matches("http://")
            .trim_start_matches("www.");
        let host = site.split('/').next().unwrap_or("");
        let name = host.strip_suffix(".com").unwrap_or(host);
        match name {
            "wsj" => Some(NewsSource::Wsj),
            "cnbc" => Some(NewsSource::Cnbc),
            "fortune" => Some(NewsSource::Fortune),
            "reuters" => Some(NewsSource::Reuters),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub published: NaiveDate,
    pub source: NewsSource,
    pub title: String,
}

impl NewsItem {
    /// Builds an item, rejecting titles that are blank after trimming.
    pub fn new(published: NaiveDate, source: NewsSource, title: &str) -> Option<Self> {
        let title = title.trim();
        if title.is_empty() {
            return None;
        }
        Some(Self {
            published,
            source,
            title: title.to_string(),
        })
    }
}

/// Result of reading an NDJSON corpus.
#[derive(Debug, Clone, Default)]
pub struct NewsCorpus {
    pub items: Vec<NewsItem>,
    pub skipped_unknown_site: usize,
    pub skipped_empty_title: usize,
}

impl NewsCorpus {
    pub fn counts_by_source(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for item in &self.items {
            counts[item.source.index()] += 1;
        }
        counts
    }
}

#[derive(Deserialize)]
struct RawNews {
    title: Option<String>,
    published: Option<String>,
    site: Option<String>,
}

fn parse_published(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.date_naive());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.date());
        }
    }
    None
}

/// Reads newline-delimited JSON records with `title`, `published` and `site`.
///
/// Records whose site is not one of the four publishers, or whose title is
/// blank, are counted and skipped. A record that is not valid JSON or lacks a
/// parseable date is an error.
pub fn parse_news<R: Read>(reader: R) -> Result<NewsCorpus, SentimentError> {
    let mut corpus = NewsCorpus::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(SentimentError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| SentimentError::MalformedNews {
            line: line_no,
            reason,
        };
        let raw: RawNews = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let published = raw
            .published
            .as_deref()
            .ok_or_else(|| malformed("missing `published`".into()))?;
        let published = parse_published(published)
            .ok_or_else(|| malformed(format!("unparseable date {published:?}")))?;
        let Some(source) = raw.site.as_deref().and_then(NewsSource::from_site) else {
            corpus.skipped_unknown_site += 1;
            continue;
        };
        match NewsItem::new(published, source, raw.title.as_deref().unwrap_or("")) {
            Some(item) => corpus.items.push(item),
            None => corpus.skipped_empty_title += 1,
        }
    }
    Ok(corpus)
}

pub fn load_news(path: impl AsRef<Path>) -> Result<NewsCorpus, SentimentError> {
    parse_news(File::open(path.as_ref()).map_err(SentimentError::Io)?)
}

/// Mean compound score per source on one trading date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySourceScores {
    pub date: NaiveDate,
    pub scores: [f64; 4],
    pub counts: [usize; 4],
}

impl DailySourceScores {
    pub fn neutral(date: NaiveDate) -> Self {
        Self {
            date,
            scores: [NEUTRAL_FILL; 4],
            counts: [0; 4],
        }
    }

    /// Article-weighted mean compound over all sources; neutral when empty.
    pub fn overall(&self) -> f64 {
        let n: usize = self.counts.iter().sum();
        if n == 0 {
            return NEUTRAL_FILL;
        }
        let total: f64 = self
            .scores
            .iter()
            .zip(self.counts)
            .map(|(s, c)| s * c as f64)
            .sum();
        total / n as f64
    }
}

/// Averages title compounds per (trading date, source).
///
/// Articles dated on a non-trading day count toward the next date in
/// `calendar`; articles after the last calendar date are ignored. Each cell's
/// compounds are summed in sorted order so that the result does not depend on
/// the order of `items`.
pub fn aggregate_daily(
    items: &[NewsItem],
    lexicon: &Lexicon,
    calendar: &[NaiveDate],
) -> Vec<DailySourceScores> {
    let mut cells: Vec<[Vec<f64>; 4]> = vec![Default::default(); calendar.len()];
    for item in items {
        let slot = calendar.partition_point(|d| *d < item.published);
        if slot == calendar.len() {
            continue;
        }
        let compound = score_text(lexicon, &item.title).compound;
        cells[slot][item.source.index()].push(compound);
    }
    calendar
        .iter()
        .zip(cells)
        .map(|(date, mut cell)| {
            let mut out = DailySourceScores::neutral(*date);
            for (k, values) in cell.iter_mut().enumerate() {
                if values.is_empty() {
                    continue;
                }
                values.sort_by(f64::total_cmp);
                out.scores[k] = values.iter().sum::<f64>() / values.len() as f64;
                out.counts[k] = values.len();
            }
            out
        })
        .collect()
}

/// Writes `date,s_wsj,s_cnbc,s_fortune,s_reuters,n_wsj,n_cnbc,n_fortune,n_reuters`.
pub fn write_daily_scores<W: Write>(
    writer: W,
    daily: &[DailySourceScores],
) -> Result<(), SentimentError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "date", "s_wsj", "s_cnbc", "s_fortune", "s_reuters", "n_wsj", "n_cnbc", "n_fortune",
        "n_reuters",
    ])?;
    for day in daily {
        let mut record = vec![day.date.to_string()];
        record.extend(day.scores.iter().map(|s| s.to_string()));
        record.extend(day.counts.iter().map(|c| c.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(SentimentError::Io)?;
    Ok(())
}

/// Reads the format produced by [`write_daily_scores`]. The `n_*` count
/// columns are optional and default to zero; rows come back date-sorted.
pub fn read_daily_scores<R: Read>(reader: R) -> Result<Vec<DailySourceScores>, SentimentError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let date_col = col("date").ok_or_else(|| SentimentError::MalformedScores {
        line: 1,
        reason: "missing date column".into(),
    })?;
    let mut score_cols = [0; 4];
    let mut count_cols = [None; 4];
    for source in NewsSource::ALL {
        let k = source.index();
        score_cols[k] = col(&format!("s_{}", source.label())).ok_or_else(|| {
            SentimentError::MalformedScores {
                line: 1,
                reason: format!("missing s_{} column", source.label()),
            }
        })?;
        count_cols[k] = col(&format!("n_{}", source.label()));
    }
    let mut out: Vec<DailySourceScores> = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let bad = |reason: String| SentimentError::MalformedScores { line, reason };
        let field = |c: usize| record.get(c).map(str::trim).unwrap_or("");
        let date: NaiveDate = field(date_col)
            .parse()
            .map_err(|_| bad(format!("bad date {:?}", field(date_col))))?;
        let mut day = DailySourceScores::neutral(date);
        for s in 0..4 {
            let v: f64 = field(score_cols[s])
                .parse()
                .map_err(|_| bad(format!("bad score {:?}", field(score_cols[s]))))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite score {v}")));
            }
            day.scores[s] = v;
            if let Some(c) = count_cols[s] {
                day.counts[s] = field(c)
                    .parse()
                    .map_err(|_| bad(format!("bad count {:?}", field(c))))?;
            }
        }
        out.push(day);
    }
    out.sort_by_key(|d| d.date);
    if let Some(w) = out.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(SentimentError::MalformedScores {
            line: 0,
            reason: format!("duplicate date {}", w[0].date),
        });
    }
    Ok(out)
}

pub fn load_daily_scores(path: impl AsRef<Path>) -> Result<Vec<DailySourceScores>, SentimentError> {
    read_daily_scores(File::open(path.as_ref()).map_err(SentimentError::Io)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Counts tokens in positive or negative titles, most frequent first.
///
/// Titles are split by the sign of their compound score; titles scoring
/// exactly zero belong to neither side. Ties are broken by token.
pub fn word_frequency(
    items: &[NewsItem],
    lexicon: &Lexicon,
    polarity: Polarity,
    stop_words: &[&str],
) -> Vec<(String, usize)> {
    let stop: HashSet<&str> = stop_words.iter().copied().collect();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for item in items {
        let compound = score_text(lexicon, &item.title).compound;
        let selected = match polarity {
            Polarity::Positive => compound > 0.0,
            Polarity::Negative => compound < 0.0,
        };
        if !selected {
            continue;
        }
        for token in tokenize(&item.title) {
            if !stop.contains(token.as_str()) {
                *counts.entry(token).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Writes `token,count` rows.
pub fn write_word_frequency<W: Write>(
    writer: W,
    ranked: &[(String, usize)],
) -> Result<(), SentimentError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["token", "count"])?;
    for (token, count) in ranked {
        w.write_record([token.as_str(), &count.to_string()])?;
    }
    w.flush().map_err(SentimentError::Io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn item(d: &str, source: NewsSource, title: &str) -> NewsItem {
        NewsItem::new(date(d), source, title).unwrap()
    }

    fn lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        for (t, v) in [("good", 1.9), ("bad", -2.5), ("rally", 1.7), ("crash", -2.9)] {
            lex.insert(t, v).unwrap();
        }
        lex
    }

    #[test]
    fn site_mapping() {
        assert_eq!(NewsSource::from_site("reuters.com"), Some(NewsSource::Reuters));
        assert_eq!(NewsSource::from_site("www.WSJ.com"), Some(NewsSource::Wsj));
        assert_eq!(NewsSource::from_site("https://www.cnbc.com/x"), Some(NewsSource::Cnbc));
        assert_eq!(NewsSource::from_site("Fortune"), Some(NewsSource::Fortune));
        assert_eq!(NewsSource::from_site("bloomberg.com"), None);
    }

    #[test]
    fn parses_ndjson_with_dates_and_datetimes() {
        let text = r#"{"title": "Stocks rally", "published": "2018-01-05", "site": "reuters.com"}
{"title": "Bad day", "published": "2018-01-05T23:10:00.000+02:00", "site": "cnbc.com"}

{"title": "Ignored", "published": "2018-01-05", "site": "example.com"}
{"title": "   ", "published": "2018-01-05", "site": "wsj.com"}
"#;
        let corpus = parse_news(text.as_bytes()).unwrap();
        assert_eq!(corpus.items.len(), 2);
        assert_eq!(corpus.items[1].published, date("2018-01-05"));
        assert_eq!(corpus.skipped_unknown_site, 1);
        assert_eq!(corpus.skipped_empty_title, 1);
        assert_eq!(corpus.counts_by_source(), [0, 1, 0, 1]);
    }

    #[test]
    fn malformed_news_line_reported() {
        let text = "{\"title\": \"a\", \"published\": \"2018-01-05\", \"site\": \"wsj.com\"}\nnot json\n";
        let err = parse_news(text.as_bytes()).unwrap_err();
        assert!(matches!(err, SentimentError::MalformedNews { line: 2, .. }));
        let text = "{\"title\": \"a\", \"published\": \"yesterday\", \"site\": \"wsj.com\"}\n";
        assert!(parse_news(text.as_bytes()).is_err());
    }

    #[test]
    fn two_reuters_titles_average() {
        let mut lex = Lexicon::new();
        // valences chosen so the compounds are +0.4 and -0.2 exactly enough
        let up = 0.4 * (15.0f64 / (1.0 - 0.16)).sqrt();
        let down = -0.2 * (15.0f64 / (1.0 - 0.04)).sqrt();
        lex.insert("up", up).unwrap();
        lex.insert("down", down).unwrap();
        let items = vec![
            item("2018-01-02", NewsSource::Reuters, "up"),
            item("2018-01-02", NewsSource::Reuters, "down"),
        ];
        let daily = aggregate_daily(&items, &lex, &[date("2018-01-02")]);
        assert!((daily[0].scores[NewsSource::Reuters.index()] - 0.1).abs() < 1e-12);
        assert_eq!(daily[0].counts, [0, 0, 0, 2]);
        assert_eq!(daily[0].scores[NewsSource::Wsj.index()], NEUTRAL_FILL);
    }

    #[test]
    fn weekend_news_moves_to_next_trading_day() {
        let calendar = [date("2018-01-05"), date("2018-01-08")];
        let items = vec![
            item("2018-01-06", NewsSource::Wsj, "good"),
            item("2018-01-09", NewsSource::Wsj, "good"),
        ];
        let daily = aggregate_daily(&items, &lexicon(), &calendar);
        assert_eq!(daily[0].counts[0], 0);
        assert_eq!(daily[1].counts[0], 1);
    }

    #[test]
    fn toy_corpus_matches_brute_force() {
        let calendar = [date("2018-01-02"), date("2018-01-03"), date("2018-01-04")];
        let titles = ["good", "bad news", "rally on", "crash", "not good", "very bad", "quiet"];
        let lex = lexicon();
        let mut items = Vec::new();
        for (k, d) in calendar.iter().enumerate() {
            for (s, source) in NewsSource::ALL.iter().enumerate() {
                for j in 0..((k + s) % 3) {
                    let t = titles[(k * 5 + s * 3 + j) % titles.len()];
                    items.push(NewsItem::new(*d, *source, t).unwrap());
                }
            }
        }
        let daily = aggregate_daily(&items, &lex, &calendar);
        assert_eq!(daily.len(), 3);
        for (k, d) in calendar.iter().enumerate() {
            for source in NewsSource::ALL {
                let mut total = 0.0;
                let mut n = 0;
                for it in &items {
                    if it.published == *d && it.source == source {
                        total += score_text(&lex, &it.title).compound;
                        n += 1;
                    }
                }
                let expected = if n == 0 { 0.0 } else { total / n as f64 };
                assert!((daily[k].scores[source.index()] - expected).abs() < 1e-12);
                assert_eq!(daily[k].counts[source.index()], n);
            }
        }
        let mut reversed = items.clone();
        reversed.reverse();
        assert_eq!(aggregate_daily(&reversed, &lex, &calendar), daily);
    }

    #[test]
    fn output_length_follows_calendar() {
        let calendar: Vec<NaiveDate> = (1..=9).map(|d| date(&format!("2018-02-0{d}"))).collect();
        assert_eq!(aggregate_daily(&[], &lexicon(), &calendar).len(), 9);
    }

    #[test]
    fn word_frequency_ranks() {
        let lex = lexicon();
        assert!(word_frequency(&[], &lex, Polarity::Positive, DEFAULT_STOP_WORDS).is_empty());
        let d = "2018-01-02";
        let items = vec![
            item(d, NewsSource::Wsj, "Rally in tech"),
            item(d, NewsSource::Wsj, "Good rally for banks"),
            item(d, NewsSource::Cnbc, "The rally continues, tech good"),
            item(d, NewsSource::Cnbc, "Crash hits banks"),
        ];
        let pos = word_frequency(&items, &lex, Polarity::Positive, DEFAULT_STOP_WORDS);
        assert_eq!(pos[0], ("rally".to_string(), 3));
        // good and tech tie at 2 and sort lexicographically
        assert_eq!(pos[1], ("good".to_string(), 2));
        assert_eq!(pos[2], ("tech".to_string(), 2));
        assert!(pos.iter().all(|(t, _)| t != "the" && t != "in"));
        let neg = word_frequency(&items, &lex, Polarity::Negative, DEFAULT_STOP_WORDS);
        assert_eq!(neg.len(), 3);
        assert_eq!(neg[0], ("banks".to_string(), 1));
    }

    #[test]
    fn csv_writers() {
        let mut buf = Vec::new();
        write_word_frequency(&mut buf, &[("rally".into(), 3)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "token,count\nrally,3\n");
        let mut buf = Vec::new();
        write_daily_scores(&mut buf, &[DailySourceScores::neutral(date("2018-01-02"))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "2018-01-02,0,0,0,0,0,0,0,0");
    }

    #[test]
    fn daily_scores_round_trip() {
        let days = vec![
            DailySourceScores {
                date: date("2018-01-03"),
                scores: [0.1, -0.25, 0.0, 0.3333333333333333],
                counts: [1, 4, 0, 3],
            },
            DailySourceScores::neutral(date("2018-01-02")),
        ];
        let mut buf = Vec::new();
        write_daily_scores(&mut buf, &days).unwrap();
        let back = read_daily_scores(buf.as_slice()).unwrap();
        assert_eq!(back, vec![days[1].clone(), days[0].clone()]);
    }

    #[test]
    fn daily_scores_without_counts() {
        let text = "date,s_wsj,s_cnbc,s_fortune,s_reuters\n2018-01-02,0.5,0,0,-0.5\n";
        let back = read_daily_scores(text.as_bytes()).unwrap();
        assert_eq!(back[0].scores, [0.5, 0.0, 0.0, -0.5]);
        assert_eq!(back[0].counts, [0; 4]);
        let dup = "date,s_wsj,s_cnbc,s_fortune,s_reuters\n2018-01-02,0,0,0,0\n2018-01-02,0,0,0,0\n";
        assert!(read_daily_scores(dup.as_bytes()).is_err());
        let bad = "date,s_wsj,s_cnbc,s_fortune,s_reuters\n2018-01-02,x,0,0,0\n";
        assert!(matches!(
            read_daily_scores(bad.as_bytes()),
            Err(SentimentError::MalformedScores { line: 2, .. })
        ));
    }
}
