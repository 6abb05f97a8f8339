//! Rule-based lexicon sentiment for news titles.
//!
//! Scoring follows the VADER recipe in reduced form: each token found in the
//! [`Lexicon`] contributes its valence, adjusted by intensity boosters and
//! negators in the three preceding tokens. The summed valence `x` is squashed
//! into `(-1, 1)` with `x / sqrt(x^2 + 15)` to give the compound score.
//!
//! ```
//! use newsflow::sentiment::{score_text, Lexicon};
//!
//! let mut lexicon = Lexicon::new();
//! lexicon.insert("good", 1.9).unwrap();
//! let score = score_text(&lexicon, "Good quarter");
//! assert!((score.compound - 0.4404).abs() < 1e-4);
//! assert!((score.pos + score.neg + score.neu - 1.0).abs() < 1e-12);
//! ```

mod lexicon;
mod news;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{load_lexicon, Lexicon, BOOST_INCREMENT, DEMO_LEXICON};
pub use news::{
    aggregate_daily, load_daily_scores, load_news, parse_news, read_daily_scores, word_frequency, write_daily_scores,
    write_word_frequency, DailySourceScores, NewsCorpus, NewsItem, NewsSource, Polarity,
    DEFAULT_STOP_WORDS, NEUTRAL_FILL,
};

/// Normalization constant in `x / sqrt(x^2 + alpha)`.
pub const COMPOUND_ALPHA: f64 = 15.0;
/// Multiplier applied to a valence preceded by a negator.
pub const NEGATION_SCALAR: f64 = -0.74;
/// How many tokens back negators and boosters are looked for.
pub const MODIFIER_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("i/o error: {0}")]
    Io(#[source] std::io::Error),
    #[error("lexicon line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("invalid lexicon entry {0:?}")]
    InvalidEntry(String),
    #[error("news line {line}: {reason}")]
    MalformedNews { line: usize, reason: String },
    #[error("daily scores line {line}: {reason}")]
    MalformedScores { line: usize, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Proportions of positive, negative and neutral mass plus the compound score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    pub compound: f64,
}

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore {
        pos: 0.0,
        neg: 0.0,
        neu: 1.0,
        compound: 0.0,
    };
}

/// Lowercased word tokens. Apostrophes survive only between word characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw in text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}')) {
        let word = raw.trim_matches(|c| c == '\'' || c == '\u{2019}');
        if word.is_empty() {
            continue;
        }
        tokens.push(word.to_lowercase().replace('\u{2019}', "'"));
    }
    tokens
}

/// Maps a summed valence into `(-1, 1)`.
pub fn compound_from_sum(sum: f64) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    let c = sum / (sum * sum + COMPOUND_ALPHA).sqrt();
    c.clamp(-1.0, 1.0)
}

fn booster_damping(distance: usize) -> f64 {
    match distance {
        1 => 1.0,
        2 => 0.95,
        _ => 0.9,
    }
}

/// Valence of the token at `idx` after booster and negation rules, or `None`
/// when the token is not in the lexicon.
fn adjusted_valence(lexicon: &Lexicon, tokens: &[String], idx: usize) -> Option<f64> {
    let mut valence = lexicon.valence(&tokens[idx])?;
    if valence == 0.0 {
        return Some(0.0);
    }
    let mut negated = false;
    for distance in 1..=MODIFIER_WINDOW.min(idx) {
        let prev = &tokens[idx - distance];
        if let Some(increment) = lexicon.booster(prev) {
            valence += valence.signum() * increment * booster_damping(distance);
        }
        if lexicon.is_negator(prev) {
            negated = true;
        }
    }
    if negated {
        valence *= NEGATION_SCALAR;
    }
    Some(valence)
}

/// Scores a piece of text against `lexicon`.
pub fn score_text(lexicon: &Lexicon, text: &str) -> SentimentScore {
    let tokens = tokenize(text);
    let mut sum = 0.0;
    let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0.0);
    for idx in 0..tokens.len() {
        match adjusted_valence(lexicon, &tokens, idx) {
            Some(v) if v > 0.0 => {
                sum += v;
                pos += v + 1.0;
            }
            Some(v) if v < 0.0 => {
                sum += v;
                neg += -v + 1.0;
            }
            _ => neu += 1.0,
        }
    }
    let total = pos + neg + neu;
    if total == 0.0 || pos + neg == 0.0 {
        return SentimentScore::NEUTRAL;
    }
    SentimentScore {
        pos: pos / total,
        neg: neg / total,
        neu: neu / total,
        compound: compound_from_sum(sum),
    }
}
