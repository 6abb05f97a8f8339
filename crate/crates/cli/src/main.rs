use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use newsflow::dataprep::FixtureConfig;
use newsflow::eval::{compare, emit_plot_data, EvalReport, PredictionTrack};
use newsflow::pipeline::{cmd_fixture, cmd_run, cmd_score, RunConfig, RunReport, ScoreOptions};
use newsflow::sentiment::load_daily_scores;

const SEED_ENV: &str = "NEWSFLOW_SEED";

/// Stock forecasting from prices and per-source news sentiment.
#[derive(Parser)]
#[command(name = "newsflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score news titles and write per-day, per-source compound means.
    Score(ScoreArgs),
    /// Generate a synthetic price and news-score corpus.
    Fixture(FixtureArgs),
    /// Train and evaluate one method on every ticker.
    Run(RunArgs),
    /// Tabulate metrics from several run reports.
    Compare(CompareArgs),
    /// Chart predictions from several runs side by side.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// News corpus, one JSON object per line with title, published and site.
    #[arg(long)]
    news: PathBuf,
    /// Tab-separated token/valence lexicon [default: bundled demo lexicon].
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Trading dates: a price CSV or one date per line [default: weekdays spanned by the corpus].
    #[arg(long)]
    calendar: Option<PathBuf>,
    /// Output CSV of daily scores.
    #[arg(long)]
    out: PathBuf,
    /// Also write the top positive and negative title words to this CSV.
    #[arg(long)]
    word_freq: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed [default: $NEWSFLOW_SEED, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of tickers.
    #[arg(long, default_value_t = 3)]
    tickers: usize,
    /// Trading days.
    #[arg(long, default_value_t = 121)]
    days: usize,
    /// Probability of a spike on each day of the last training window.
    #[arg(long, default_value_t = 0.0)]
    spike_rate: f64,
    /// Source receiving spikes (0 wsj, 1 cnbc, 2 fortune, 3 reuters).
    #[arg(long, default_value_t = 0)]
    spike_source: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price CSV with header date,ticker,adj_close.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Daily score CSV written by `score`.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// News corpus to score on the fly when no scores file is given.
    #[arg(long)]
    news: Option<PathBuf>,
    /// Lexicon used with --news [default: bundled demo lexicon].
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// arma, lstm-no-news, lstm-news or dp-lstm [default: dp-lstm].
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated tickers to run [default: all].
    #[arg(long)]
    tickers: Option<String>,
    /// Rolling window size [default: 10].
    #[arg(long)]
    window: Option<usize>,
    /// Fraction of dates used for training [default: 0.85].
    #[arg(long)]
    split: Option<f64>,
    /// Noise weight on each source's variance [default: 0.1].
    #[arg(long)]
    lambda_noise: Option<f64>,
    /// Training epochs [default: 200].
    #[arg(long)]
    epochs: Option<usize>,
    /// ADAM learning rate [default: 0.001].
    #[arg(long)]
    lr: Option<f64>,
    /// LSTM hidden units per layer [default: 32].
    #[arg(long)]
    hidden: Option<usize>,
    /// Dropout rate [default: 0.2].
    #[arg(long)]
    dropout: Option<f64>,
    /// Mini-batch size, 0 for full batch [default: 16].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Run seed [default: $NEWSFLOW_SEED, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tickers trained in parallel [default: 1].
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// report.json files from `run`, or bare evaluation reports.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Run output directories containing predictions.json.
    #[arg(long, required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Daily score CSV for the sentiment chart.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn build_run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(seed) = env_seed()? {
        config.seed = seed;
    }
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let flags: [(&str, Option<String>); 17] = [
        ("prices", path(&args.prices)),
        ("scores", path(&args.scores)),
        ("news", path(&args.news)),
        ("lexicon", path(&args.lexicon)),
        ("method", args.method.clone()),
        ("tickers", args.tickers.clone()),
        ("window", args.window.map(|v| v.to_string())),
        ("split", args.split.map(|v| v.to_string())),
        ("lambda-noise", args.lambda_noise.map(|v| v.to_string())),
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("lr", args.lr.map(|v| v.to_string())),
        ("hidden", args.hidden.map(|v| v.to_string())),
        ("dropout", args.dropout.map(|v| v.to_string())),
        ("batch-size", args.batch_size.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("out", path(&args.out)),
        ("workers", args.workers.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    Ok(config)
}

fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(run) = serde_json::from_str::<RunReport>(&text) {
        return Ok(run.summary);
    }
    serde_json::from_str(&text).with_context(|| format!("{} is not a report", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Score(a) => {
            let summary = cmd_score(&ScoreOptions {
                news: a.news,
                lexicon: a.lexicon,
                calendar: a.calendar,
                out: a.out.clone(),
                word_freq: a.word_freq,
            })?;
            println!("{summary}");
            println!("wrote {}", a.out.display());
        }
        Command::Fixture(a) => {
            let seed = match a.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let config = FixtureConfig {
                seed,
                tickers: a.tickers,
                days: a.days,
                spike_rate: a.spike_rate,
                spike_source: a.spike_source,
                ..FixtureConfig::default()
            };
            let fixture = cmd_fixture(&config, &a.out)?;
            println!(
                "seed {seed}: {} tickers x {} days, adversarial={}",
                fixture.prices.len(),
                fixture.dates.len(),
                fixture.truth.adversarial
            );
            println!("wrote {}", a.out.display());
        }
        Command::Run(a) => {
            let config = build_run_config(&a)?;
            let report = cmd_run(&config)?;
            let s = &report.summary;
            println!("method {} seed {}", report.method, report.seed);
            println!(
                "tickers {} test points {}: mean MPA {:.6}, MSE {:.6}, accuracy {:.6}",
                report.tickers.len(),
                s.points,
                s.mean_mpa,
                s.mse,
                s.accuracy
            );
            println!("wrote {}", config.out.join("report.json").display());
        }
        Command::Compare(a) => {
            let reports = a
                .reports
                .iter()
                .map(|p| read_report(p))
                .collect::<Result<Vec<_>>>()?;
            let table = compare(&reports)?;
            print!("{}", table.to_text());
            if let Some(out) = a.out {
                let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
                table.write_csv(file)?;
            }
        }
        Command::Plot(a) => {
            let mut tracks = Vec::new();
            for dir in &a.runs {
                let path = dir.join("predictions.json");
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let track: PredictionTrack = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                if tracks.iter().any(|t: &PredictionTrack| t.method == track.method) {
                    bail!("two runs share the method label {:?}", track.method);
                }
                tracks.push(track);
            }
            let daily = match &a.scores {
                Some(p) => load_daily_scores(p).with_context(|| format!("reading {}", p.display()))?,
                None => Vec::new(),
            };
            for path in emit_plot_data(&a.out, &tracks, &daily)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
