//! Run settings and their flat key-value file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataprep::{DEFAULT_LAMBDA_NOISE, DEFAULT_SPLIT, DEFAULT_WINDOW};
use crate::neural::{DEFAULT_DROPOUT, DEFAULT_EPOCHS, DEFAULT_HIDDEN};

pub const DEFAULT_BATCH_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Arma,
    LstmNoNews,
    LstmNews,
    DpLstm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Arma, Method::LstmNoNews, Method::LstmNews, Method::DpLstm];

    pub fn label(self) -> &'static str {
        match self {
            Method::Arma => "arma",
            Method::LstmNoNews => "lstm-no-news",
            Method::LstmNews => "lstm-news",
            Method::DpLstm => "dp-lstm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s.trim())
            .ok_or_else(|| {
                format!("unknown method {s:?}; expected arma, lstm-no-news, lstm-news or dp-lstm")
            })
    }
}

/// Everything a run depends on. The output directory and worker count do
/// not change results, so they are left out of the serialized echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub prices: Option<PathBuf>,
    /// Daily per-source scores; when absent they are computed from `news`.
    pub scores: Option<PathBuf>,
    pub news: Option<PathBuf>,
    /// Lexicon for scoring `news`; the bundled demo lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Restrict the run to these tickers.
    pub tickers: Option<Vec<String>>,
    pub window: usize,
    pub split: f64,
    pub lambda_noise: f64,
    pub hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Mini-batch size; 0 trains on the full set each step.
    pub batch_size: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::DpLstm,
            prices: None,
            scores: None,
            news: None,
            lexicon: None,
            tickers: None,
            window: DEFAULT_WINDOW,
            split: DEFAULT_SPLIT,
            lambda_noise: DEFAULT_LAMBDA_NOISE,
            hidden: DEFAULT_HIDDEN,
            dropout: DEFAULT_DROPOUT,
            epochs: DEFAULT_EPOCHS,
            lr: 1e-3,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
            out: PathBuf::from("out"),
            workers: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| PipelineError::new("config", format!("{key} = {value:?}: {e}")))
}

impl RunConfig {
    /// Sets one field by name. Hyphens and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let key = key.trim().replace('_', "-");
        let path = || Some(PathBuf::from(value.trim()));
        match key.as_str() {
            "method" => self.method = value.parse().map_err(|e| PipelineError::new("config", e))?,
            "prices" => self.prices = path(),
            "scores" => self.scores = path(),
            "news" => self.news = path(),
            "lexicon" => self.lexicon = path(),
            "tickers" => {
                let list: Vec<String> = value
                    .split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect();
                self.tickers = (!list.is_empty()).then_some(list);
            }
            "window" => self.window = parse(&key, value)?,
            "split" => self.split = parse(&key, value)?,
            "lambda-noise" => self.lambda_noise = parse(&key, value)?,
            "hidden" => self.hidden = parse(&key, value)?,
            "dropout" => self.dropout = parse(&key, value)?,
            "epochs" => self.epochs = parse(&key, value)?,
            "lr" => self.lr = parse(&key, value)?,
            "batch-size" => self.batch_size = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "workers" => self.workers = parse(&key, value)?,
            _ => return Err(PipelineError::new("config", format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines in order.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::new("config", format!("line {}: expected key = value", k + 1))
            })?;
            self.set(key, value)
                .map_err(|e| PipelineError::new("config", format!("line {}: {}", k + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new("config", format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |msg: String| Err(PipelineError::new("config", msg));
        if self.window == 0 {
            return fail("window must be at least 1".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return fail(format!("split {} must lie in (0, 1)", self.split));
        }
        if !(self.lambda_noise.is_finite() && self.lambda_noise >= 0.0) {
            return fail(format!("lambda-noise {} must be non-negative", self.lambda_noise));
        }
        if self.hidden == 0 {
            return fail("hidden must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} must lie in [0, 1)", self.dropout));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return fail(format!("lr {} must be non-negative", self.lr));
        }
        if self.prices.is_none() {
            return fail("a price file is required".into());
        }
        if self.scores.is_none() && self.news.is_none() && self.method != Method::LstmNoNews {
            return fail("either a scores file or a news corpus is required".into());
        }
        Ok(())
    }
}
