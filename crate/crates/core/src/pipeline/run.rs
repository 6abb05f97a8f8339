//! The `run` command: prepare, train, predict and evaluate per ticker.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Method, PipelineError, RunConfig, Stage};
use crate::baseline::{
    sentiment_arma_fit, sentiment_arma_predict, ArmaError, FitOptions, ResidualState,
    SentimentArmaParams,
};
use crate::dataprep::{
    build_augmented_trainset, build_windows, derive_seed, load_prices, mix_seed, write_joint_csv,
    JointSeries, PriceSeries, CHANNELS,
};
use crate::eval::{emit_plot_data, evaluate, EvalReport, PredictionTrack};
use crate::neural::{predict, train, AdamConfig, Checkpoint, NetworkConfig, TrainConfig};
use crate::sentiment::{aggregate_daily, load_daily_scores, load_lexicon, load_news, DailySourceScores, Lexicon};

/// Per-ticker summary stored in the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerOutcome {
    pub ticker: String,
    pub seed: u64,
    pub train_windows: usize,
    pub test_windows: usize,
    /// Mean training loss of the last epoch, in normalized units.
    pub final_train_loss: Option<f64>,
    pub arma: Option<SentimentArmaParams>,
    pub report: EvalReport,
}

/// Everything produced for one ticker.
#[derive(Debug, Clone)]
pub struct TickerRun {
    pub outcome: TickerOutcome,
    pub track: PredictionTrack,
    pub joint: JointSeries,
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub seed: u64,
    pub config: RunConfig,
    /// Metrics over all tickers together.
    pub summary: EvalReport,
    pub tickers: Vec<TickerOutcome>,
}

fn mean_sentiment(joint: &JointSeries) -> Vec<f64> {
    joint
        .rows
        .iter()
        .map(|r| r[1..].iter().sum::<f64>() / (CHANNELS - 1) as f64)
        .collect()
}

fn run_arma(
    config: &RunConfig,
    joint: &JointSeries,
    track: &mut PredictionTrack,
    ticker: &str,
    stage: &str,
) -> Result<(SentimentArmaParams, usize, usize), PipelineError> {
    let p = config.window;
    let ds = build_windows(joint, p, config.split).stage(stage)?;
    let prices = joint.prices();
    let sentiment = mean_sentiment(joint);
    let train_rows = ds.train_rows;
    let fit = |options| {
        sentiment_arma_fit(&prices[..train_rows], &sentiment[..train_rows], p, 0, options)
    };
    let params = match fit(FitOptions::default()) {
        Err(ArmaError::Singular) => {
            log::warn!("{ticker}: singular ARMA system; refitting with a small ridge");
            fit(FitOptions::with_ridge())
        }
        other => other,
    }
    .stage(stage)?;
    let residuals = ResidualState::zeros(0);
    for w in &ds.test {
        let t = joint
            .dates
            .binary_search(&w.target_date)
            .map_err(|_| PipelineError::new(stage, "test date missing from series"))?;
        let pred =
            sentiment_arma_predict(&params, &prices[..t], &sentiment[..t], &residuals).stage(stage)?;
        track.push(ticker, w.target_date, prices[t], Some(pred)).stage(stage)?;
    }
    Ok((params, ds.train.len(), ds.test.len()))
}

/// Runs the configured method on one ticker.
pub fn run_ticker(
    config: &RunConfig,
    prices: &PriceSeries,
    daily: &[DailySourceScores],
) -> Result<TickerRun, PipelineError> {
    let ticker = prices.ticker.as_str();
    let stage = format!("prepare {ticker}");
    let joint = JointSeries::join(prices, daily).stage(&stage)?;
    let seed = derive_seed(config.seed, ticker);
    let mut track = PredictionTrack::new(config.method.label());

    let (final_train_loss, arma, checkpoint, train_windows, test_windows) = match config.method {
        Method::Arma => {
            let (params, n_train, n_test) =
                run_arma(config, &joint, &mut track, ticker, &format!("arma {ticker}"))?;
            (None, Some(params), None, n_train, n_test)
        }
        method => {
            let data = if method == Method::LstmNoNews {
                joint.without_news()
            } else {
                joint.clone()
            };
            let ds = if method == Method::DpLstm {
                build_augmented_trainset(
                    &data,
                    config.window,
                    config.split,
                    config.lambda_noise,
                    mix_seed(seed, 0x6e6f_6973_65),
                )
            } else {
                build_windows(&data, config.window, config.split)
            }
            .stage(&stage)?;
            let net = NetworkConfig::stacked(CHANNELS, config.hidden, config.dropout);
            let hyper = TrainConfig {
                epochs: config.epochs,
                seed,
                batch_size: (config.batch_size > 0).then_some(config.batch_size),
                early_stop_patience: None,
                adam: AdamConfig::with_learning_rate(config.lr),
            };
            let stage = format!("train {ticker}");
            let report = train(&net, &ds.train, &hyper).stage(&stage)?;
            let inputs: Vec<&[f64]> = ds.test.iter().map(|w| w.input.as_slice()).collect();
            let preds = predict(&net, &report.params, &inputs).stage(&stage)?;
            for (w, pred) in ds.test.iter().zip(preds) {
                track
                    .push(ticker, w.target_date, w.target_price(), Some(w.meta.denormalize(pred)))
                    .stage(&stage)?;
            }
            let ckpt = Checkpoint::new(&net, &report.params, Some(&report.optimizer), seed);
            (
                report.epoch_losses.last().copied(),
                None,
                Some(ckpt),
                ds.train.len(),
                ds.test.len(),
            )
        }
    };
    let report = evaluate(&track).stage(&format!("evaluate {ticker}"))?;
    Ok(TickerRun {
        outcome: TickerOutcome {
            ticker: ticker.to_string(),
            seed,
            train_windows,
            test_windows,
            final_train_loss,
            arma,
            report,
        },
        track,
        joint,
        checkpoint,
    })
}

fn run_all(
    config: &RunConfig,
    series: &[PriceSeries],
    daily: &[DailySourceScores],
) -> Vec<Result<TickerRun, PipelineError>> {
    let workers = config.workers.clamp(1, series.len().max(1));
    if workers == 1 {
        return series.iter().map(|s| run_ticker(config, s, daily)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<TickerRun, PipelineError>>>> =
        series.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = series.get(i) else { break };
                let result = run_ticker(config, s, daily);
                *slots[i].lock().expect("worker poisoned a slot") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("worker poisoned a slot")
                .expect("every ticker is visited")
        })
        .collect()
}

fn load_daily(config: &RunConfig, calendar: &[chrono::NaiveDate]) -> Result<Vec<DailySourceScores>, PipelineError> {
    if let Some(path) = &config.scores {
        return load_daily_scores(path).stage(&format!("load scores {}", path.display()));
    }
    if let Some(path) = &config.news {
        let lexicon = match &config.lexicon {
            Some(p) => load_lexicon(p).stage(&format!("lexicon {}", p.display()))?,
            None => Lexicon::demo(),
        };
        let corpus = load_news(path).stage(&format!("news {}", path.display()))?;
        return Ok(aggregate_daily(&corpus.items, &lexicon, calendar));
    }
    Ok(Vec::new())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let stage = format!("write {}", path.display());
    let mut w = BufWriter::new(File::create(path).stage(&stage)?);
    serde_json::to_writer_pretty(&mut w, value).stage(&stage)?;
    w.write_all(b"\n").stage(&stage)?;
    w.flush().stage(&stage)
}

/// Runs `config.method` on every ticker and writes, under `config.out`:
/// `report.json`, `predictions.json`, `joint/<ticker>.csv`, either
/// `checkpoints/<ticker>.json` or `arma/<ticker>.json`, and `plots/`.
pub fn cmd_run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let prices_path = config.prices.as_ref().expect("validated");
    let mut series =
        load_prices(prices_path).stage(&format!("load prices {}", prices_path.display()))?;
    if let Some(wanted) = &config.tickers {
        for t in wanted {
            if !series.iter().any(|s| &s.ticker == t) {
                return Err(PipelineError::new("select tickers", format!("no complete series for {t}")));
            }
        }
        series.retain(|s| wanted.contains(&s.ticker));
    }
    let daily = load_daily(config, &series[0].dates)?;

    let mut runs = Vec::with_capacity(series.len());
    for result in run_all(config, &series, &daily) {
        runs.push(result?);
    }

    let mut merged = PredictionTrack::new(config.method.label());
    for run in &runs {
        merged.extend(&run.track).stage("evaluate")?;
    }
    let summary = evaluate(&merged).stage("evaluate")?;
    let report = RunReport {
        method: config.method,
        seed: config.seed,
        config: config.clone(),
        summary,
        tickers: runs.iter().map(|r| r.outcome.clone()).collect(),
    };

    let out = &config.out;
    let stage = "write outputs";
    for sub in ["joint", "plots"] {
        fs::create_dir_all(out.join(sub)).stage(stage)?;
    }
    for run in &runs {
        let name = format!("{}.csv", run.outcome.ticker);
        let mut w = BufWriter::new(File::create(out.join("joint").join(name)).stage(stage)?);
        write_joint_csv(&mut w, &run.joint).stage(stage)?;
        w.flush().stage(stage)?;
        if let Some(ckpt) = &run.checkpoint {
            fs::create_dir_all(out.join("checkpoints")).stage(stage)?;
            ckpt.save(out.join("checkpoints").join(format!("{}.json", run.outcome.ticker)))
                .stage(stage)?;
        }
        if let Some(params) = &run.outcome.arma {
            fs::create_dir_all(out.join("arma")).stage(stage)?;
            write_json(&out.join("arma").join(format!("{}.json", run.outcome.ticker)), params)?;
        }
    }
    emit_plot_data(out.join("plots"), std::slice::from_ref(&merged), &daily).stage(stage)?;
    write_json(&out.join("predictions.json"), &merged)?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
