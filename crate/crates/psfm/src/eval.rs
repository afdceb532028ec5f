//! Forecast accuracy metrics, model ranking, and report rendering.
//!
//! Errors are summarized per series by the mean and median absolute
//! percentage error, the interquartile range of the percentage errors
//! (linear-interpolation quartiles), and the root mean square error.
//! Models are compared across series by ranking them within each series
//! (ties share the mean rank) and averaging the ranks.

use crate::error::{Error, Result};

/// Absolute percentage error of one forecast against one actual.
pub fn ape(forecast: f64, actual: f64) -> Result<f64> {
    if !(actual.is_finite() && actual > 0.0) {
        return Err(Error::Domain(format!(
            "percentage errors need positive actuals, got {actual}"
        )));
    }
    if !forecast.is_finite() {
        return Err(Error::Domain(format!("forecast {forecast} is not finite")));
    }
    Ok(100.0 * (forecast - actual).abs() / actual)
}

/// Accuracy summary over one forecast horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub mape: f64,
    pub median_ape: f64,
    pub iqr_ape: f64,
    pub rmse: f64,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let last = sorted.len() - 1;
    let position = last as f64 * p;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Computes the metric set for paired forecasts and actuals.
pub fn compute_metrics(forecast: &[f64], actual: &[f64]) -> Result<MetricSet> {
    if forecast.len() != actual.len() {
        return Err(Error::Shape { expected: actual.len(), actual: forecast.len() });
    }
    if forecast.is_empty() {
        return Err(Error::InsufficientData("no forecasts to score".into()));
    }
    let mut apes = Vec::with_capacity(forecast.len());
    let mut sse = 0.0;
    for (f, a) in forecast.iter().zip(actual) {
        apes.push(ape(*f, *a)?);
        let e = f - a;
        sse += e * e;
    }
    let mape = apes.iter().sum::<f64>() / apes.len() as f64;
    let rmse = (sse / forecast.len() as f64).sqrt();
    apes.sort_by(|a, b| a.partial_cmp(b).expect("percentage errors are finite"));
    let median_ape = quantile(&apes, 0.5);
    let iqr_ape = quantile(&apes, 0.75) - quantile(&apes, 0.25);
    Ok(MetricSet { mape, median_ape, iqr_ape, rmse })
}

/// Ranks within one score list, ascending, ties sharing the mean rank.
fn ranks_of(scores: &[f64]) -> Result<Vec<f64>> {
    for &s in scores {
        if !s.is_finite() {
            return Err(Error::Domain(format!("cannot rank non-finite score {s}")));
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite").then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Positions i..=j hold equal scores; they share the mean rank.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Average rank per model over a score table. `scores[s][m]` is the error
/// of model `m` on series `s`; lower scores rank first.
pub fn average_ranks(scores: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = scores
        .first()
        .ok_or_else(|| Error::InsufficientData("no series to rank over".into()))?;
    let n_models = first.len();
    if n_models == 0 {
        return Err(Error::InsufficientData("no models to rank".into()));
    }
    let mut totals = vec![0.0; n_models];
    for row in scores {
        if row.len() != n_models {
            return Err(Error::Shape { expected: n_models, actual: row.len() });
        }
        for (t, r) in totals.iter_mut().zip(ranks_of(row)?) {
            *t += r;
        }
    }
    let n_series = scores.len() as f64;
    Ok(totals.into_iter().map(|t| t / n_series).collect())
}

/// One line of an accuracy report: metrics averaged over series, plus the
/// average rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub median_ape: f64,
    pub mape: f64,
    pub iqr_ape: f64,
    pub rmse: f64,
    pub avg_rank: f64,
}

const REPORT_COLUMNS: [&str; 5] = ["median_ape", "mape", "iqr_ape", "rmse", "avg_rank"];

fn row_values(row: &ReportRow) -> [f64; 5] {
    [row.median_ape, row.mape, row.iqr_ape, row.rmse, row.avg_rank]
}

/// Renders rows as an aligned text table with two-decimal numbers.
pub fn render_report_text(rows: &[ReportRow]) -> String {
    let label_width = rows
        .iter()
        .map(|r| r.model.len())
        .chain(std::iter::once("model".len()))
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    out.push_str(&format!("{:<label_width$}", "model"));
    for col in REPORT_COLUMNS {
        out.push_str(&format!("  {col:>10}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:<label_width$}", row.model));
        for v in row_values(row) {
            out.push_str(&format!("  {v:>10.2}"));
        }
        out.push('\n');
    }
    out
}

/// Renders rows as CSV with two-decimal numbers.
pub fn render_report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("model,median_ape,mape,iqr_ape,rmse,avg_rank\n");
    for row in rows {
        out.push_str(&row.model);
        for v in row_values(row) {
            out.push_str(&format!(",{v:.2}"));
        }
        out.push('\n');
    }
    out
}
