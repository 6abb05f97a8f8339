//! Valence lexicon plus the booster and negator word lists used by the scorer.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::SentimentError;

/// Increment applied by intensity boosters such as "very".
pub const BOOST_INCREMENT: f64 = 0.293;

const INCREASING_BOOSTERS: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerably",
    "decidedly",
    "deeply",
    "enormously",
    "entirely",
    "especially",
    "exceptionally",
    "extremely",
    "fully",
    "greatly",
    "highly",
    "hugely",
    "incredibly",
    "intensely",
    "majorly",
    "more",
    "most",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "sharply",
    "so",
    "substantially",
    "thoroughly",
    "totally",
    "tremendously",
    "unbelievably",
    "unusually",
    "utterly",
    "very",
];

const DECREASING_BOOSTERS: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "kinda",
    "less",
    "little",
    "marginally",
    "modestly",
    "occasionally",
    "partly",
    "scarcely",
    "slightly",
    "somewhat",
    "sorta",
];

const NEGATORS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "dont", "hadnt",
    "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither", "neednt", "never", "none", "nope",
    "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "wasnt", "werent",
    "without", "wont", "wouldnt", "rarely", "seldom", "despite", "no",
];

/// Small finance-flavoured lexicon shipped with the crate (`token<TAB>valence`).
pub const DEMO_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Token valences plus the modifier lists consulted by [`super::score_text`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negators: HashSet<String>,
}

impl Lexicon {
    /// Empty valence table with the default booster and negator lists.
    pub fn new() -> Self {
        let mut boosters = HashMap::new();
        for word in INCREASING_BOOSTERS {
            boosters.insert((*word).to_string(), BOOST_INCREMENT);
        }
        for word in DECREASING_BOOSTERS {
            boosters.insert((*word).to_string(), -BOOST_INCREMENT);
        }
        Self {
            entries: HashMap::new(),
            boosters,
            negators: NEGATORS.iter().map(|w| (*w).to_string()).collect(),
        }
    }

    /// Parses `token<TAB>valence[<TAB>...]` lines. Blank lines are skipped and a
    /// repeated token keeps the value from its last line.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, SentimentError> {
        let mut lexicon = Self::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(SentimentError::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or("").trim().to_lowercase();
            let malformed = |reason: &str| SentimentError::MalformedLexicon {
                line: line_no,
                reason: reason.to_string(),
            };
            if token.is_empty() {
                return Err(malformed("empty token"));
            }
            let raw = cols.next().ok_or_else(|| malformed("missing valence column"))?;
            let valence: f64 = raw
                .trim()
                .parse()
                .map_err(|_| malformed(&format!("valence {raw:?} is not a number")))?;
            if !valence.is_finite() {
                return Err(malformed("valence is not finite"));
            }
            lexicon.entries.insert(token, valence);
        }
        Ok(lexicon)
    }

    /// Loads a lexicon file from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SentimentError> {
        let file = File::open(path.as_ref()).map_err(SentimentError::Io)?;
        Self::from_reader(file)
    }

    /// The bundled demo lexicon.
    pub fn demo() -> Self {
        Self::from_reader(DEMO_LEXICON.as_bytes()).expect("bundled lexicon parses")
    }

    /// Inserts or replaces a valence. Tokens are lowercased.
    pub fn insert(&mut self, token: &str, valence: f64) -> Result<(), SentimentError> {
        let token = token.trim().to_lowercase();
        if token.is_empty() || !valence.is_finite() {
            return Err(SentimentError::InvalidEntry(token));
        }
        self.entries.insert(token, valence);
        Ok(())
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn booster(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    /// True for listed negators and any contraction ending in `n't`.
    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token) || token.ends_with("n't")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Free-function form of [`Lexicon::load`].
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, SentimentError> {
    Lexicon::load(path)
}
