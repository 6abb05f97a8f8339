//! Side-by-side comparison of evaluation reports.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{EvalError, EvalReport};

pub const METRIC_NAMES: [&str; 4] = ["mean_mpa", "mse", "accuracy", "mean_error_percent"];
/// Whether a larger value is better, per entry of [`METRIC_NAMES`].
const HIGHER_IS_BETTER: [bool; 4] = [true, false, true, false];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub values: [f64; 4],
    /// Set where this row holds the best value; ties all get the flag.
    pub best: [bool; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Lines up the metrics of each report and flags the best per metric.
pub fn compare(reports: &[EvalReport]) -> Result<Comparison, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports(reports.len()));
    }
    let mut seen = HashSet::new();
    for r in reports {
        if !seen.insert(r.method.as_str()) {
            return Err(EvalError::DuplicateLabel(r.method.clone()));
        }
    }
    let values: Vec<[f64; 4]> = reports
        .iter()
        .map(|r| [r.mean_mpa, r.mse, r.accuracy, r.mean_error_percent])
        .collect();
    let mut best_value = [f64::NAN; 4];
    for (m, best) in best_value.iter_mut().enumerate() {
        for v in values.iter().map(|row| row[m]).filter(|v| !v.is_nan()) {
            let better = if HIGHER_IS_BETTER[m] { v > *best } else { v < *best };
            if best.is_nan() || better {
                *best = v;
            }
        }
    }
    let rows = reports
        .iter()
        .zip(values)
        .map(|(r, v)| ComparisonRow {
            label: r.method.clone(),
            values: v,
            best: std::array::from_fn(|m| v[m] == best_value[m]),
        })
        .collect();
    Ok(Comparison { rows })
}

impl Comparison {
    /// Aligned plain-text table; best values carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = std::iter::once("method".to_string())
            .chain(METRIC_NAMES.iter().map(|s| s.to_string()))
            .collect();
        let mut cells = vec![header];
        for row in &self.rows {
            let mut line = vec![row.label.clone()];
            for m in 0..4 {
                let star = if row.best[m] { "*" } else { " " };
                line.push(format!("{:.9}{star}", row.values[m]));
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..5)
            .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &cells {
            for (c, cell) in line.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        }
        out
    }

    /// `method,<metric>...,best_<metric>...`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["method".to_string()];
        header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        header.extend(METRIC_NAMES.iter().map(|s| format!("best_{s}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.label.clone()];
            rec.extend(row.values.iter().map(f64::to_string));
            rec.extend(row.best.iter().map(bool::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
