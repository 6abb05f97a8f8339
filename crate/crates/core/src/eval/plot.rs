//! Plot-ready CSV tables and small self-contained SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{EvalError, PredictionTrack};
use crate::sentiment::DailySourceScores;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#222222", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// A labelled line; `None` leaves a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub values: Vec<Option<f64>>,
}

fn prediction_rows(tracks: &[PredictionTrack]) -> BTreeMap<(String, NaiveDate), (f64, Vec<Option<f64>>)> {
    let mut rows: BTreeMap<(String, NaiveDate), (f64, Vec<Option<f64>>)> = BTreeMap::new();
    for (m, track) in tracks.iter().enumerate() {
        for (date, ticker, point) in track.points() {
            let row = rows
                .entry((ticker.to_string(), date))
                .or_insert_with(|| (point.real, vec![None; tracks.len()]));
            row.1[m] = point.predicted;
        }
    }
    rows
}

/// `date,ticker,real,<method>...`, one row per (ticker, date).
pub fn write_prediction_csv<W: Write>(writer: W, tracks: &[PredictionTrack]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string(), "ticker".into(), "real".into()];
    header.extend(tracks.iter().map(|t| t.method.clone()));
    w.write_record(&header)?;
    for ((ticker, date), (real, preds)) in prediction_rows(tracks) {
        let mut rec = vec![date.to_string(), ticker, real.to_string()];
        rec.extend(preds.iter().map(|p| p.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn mean_compound(day: &DailySourceScores) -> f64 {
    day.scores.iter().sum::<f64>() / day.scores.len() as f64
}

/// `date,mean_compound`, the plain mean of the four source scores.
pub fn write_sentiment_csv<W: Write>(writer: W, daily: &[DailySourceScores]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "mean_compound"])?;
    for day in daily {
        w.write_record([day.date.to_string(), mean_compound(day).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders `series` against shared x labels.
///
/// The y range is `y_range` when given, otherwise the data range padded by
/// 5%. A dashed gridline marks zero whenever it lies inside the range.
pub fn line_chart_svg(
    title: &str,
    x_labels: &[String],
    series: &[Series],
    y_range: Option<(f64, f64)>,
) -> String {
    let (lo, hi) = y_range.unwrap_or_else(|| {
        let values = series.iter().flat_map(|s| s.values.iter().flatten().copied());
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (-1.0, 1.0)
        } else if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    });
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let n = x_labels
        .len()
        .max(series.iter().map(|s| s.values.len()).max().unwrap_or(0));
    let x = |i: usize| {
        if n <= 1 {
            MARGIN + plot_w / 2.0
        } else {
            MARGIN + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let y = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path class="axes" d="M{left},{top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{hi:.4}</text>"#, left - 4.0, top + 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{lo:.4}</text>"#, left - 4.0, bottom);
    if let (Some(first), Some(last)) = (x_labels.first(), x_labels.last()) {
        let _ = writeln!(svg, r#"<text x="{left}" y="{}">{}</text>"#, bottom + 16.0, escape(first));
        let _ = writeln!(
            svg,
            r#"<text x="{right}" y="{}" text-anchor="end">{}</text>"#,
            bottom + 16.0,
            escape(last)
        );
    }
    if lo <= 0.0 && 0.0 <= hi {
        let _ = writeln!(
            svg,
            r##"<line class="zero" x1="{left}" y1="{z:.2}" x2="{right}" y2="{z:.2}" stroke="#999999" stroke-dasharray="4 3"/>"##,
            z = y(0.0)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| format!("{:.2},{:.2}", x(i), y(v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(&s.label),
            points.join(" ")
        );
        let ly = top + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            right - 130.0,
            right - 110.0,
            right - 105.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// Writes `predictions.csv`, `sentiment.csv`, `sentiment.svg` and one
/// `predictions_<ticker>.svg` per ticker into `dir`. Returns the paths.
pub fn emit_plot_data(
    dir: impl AsRef<Path>,
    tracks: &[PredictionTrack],
    daily: &[DailySourceScores],
) -> Result<Vec<PathBuf>, EvalError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("predictions.csv");
    let mut buf = Vec::new();
    write_prediction_csv(&mut buf, tracks)?;
    write_file(&path, &buf)?;
    written.push(path);

    let path = dir.join("sentiment.csv");
    let mut buf = Vec::new();
    write_sentiment_csv(&mut buf, daily)?;
    write_file(&path, &buf)?;
    written.push(path);

    let labels: Vec<String> = daily.iter().map(|d| d.date.to_string()).collect();
    let compound = Series {
        label: "mean compound".into(),
        values: daily.iter().map(|d| Some(mean_compound(d))).collect(),
    };
    let path = dir.join("sentiment.svg");
    write_file(
        &path,
        line_chart_svg("Daily news sentiment", &labels, &[compound], Some((-1.0, 1.0))).as_bytes(),
    )?;
    written.push(path);

    let rows = prediction_rows(tracks);
    let mut tickers: Vec<&String> = rows.keys().map(|(t, _)| t).collect();
    tickers.dedup();
    for ticker in tickers {
        let ticker_rows: Vec<(&NaiveDate, &(f64, Vec<Option<f64>>))> = rows
            .iter()
            .filter(|((t, _), _)| t == ticker)
            .map(|((_, d), r)| (d, r))
            .collect();
        let labels: Vec<String> = ticker_rows.iter().map(|(d, _)| d.to_string()).collect();
        let mut series = vec![Series {
            label: "real".into(),
            values: ticker_rows.iter().map(|(_, r)| Some(r.0)).collect(),
        }];
        for (m, track) in tracks.iter().enumerate() {
            series.push(Series {
                label: track.method.clone(),
                values: ticker_rows.iter().map(|(_, r)| r.1[m]).collect(),
            });
        }
        let safe: String = ticker
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let path = dir.join(format!("predictions_{safe}.svg"));
        write_file(
            &path,
            line_chart_svg(&format!("{ticker} test predictions"), &labels, &series, None).as_bytes(),
        )?;
        written.push(path);
    }
    Ok(written)
}
