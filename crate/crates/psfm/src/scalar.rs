//! Forecasting for positive scalar histories.
//!
//! When y-patterns are coded with their own output-window statistics, those
//! statistics are unknown at forecast time and must be predicted from their
//! own history (one value per training origin, monthly stride). This module
//! provides a small family of single-series forecasters for that job, plus
//! AICc-based automatic selection among them. The same forecasters serve as
//! plain baselines on raw demand series.

use crate::error::{Error, Result};

/// A positive scalar history, oldest first. Demand values, their window
/// means, and dispersions of non-degenerate windows are all positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarHistory {
    values: Vec<f64>,
}

impl ScalarHistory {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "a scalar history needs at least 3 values, got {}",
                values.len()
            )));
        }
        for &v in &values {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "scalar history values must be positive, got {v}"
                )));
            }
        }
        Ok(ScalarHistory { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A scalar forecasting method.
///
/// The `Auto*` variants select among concrete candidates by AICc at call
/// time: `AutoSimple` over naive, drift and the yearly seasonal naive;
/// `AutoSmoothing` over a grid of Holt parameters; `AutoSelect` over the
/// union of the two pools.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarModelSpec {
    /// Repeat the last value.
    Naive,
    /// Extend the line through the first and last values.
    Drift,
    /// Repeat the value one period earlier.
    SeasonalNaive(usize),
    /// Additive-trend exponential smoothing. With `beta == 0` the trend
    /// component is disabled entirely, so `alpha == 1, beta == 0` degrades
    /// to the naive method.
    HoltLinear { alpha: f64, beta: f64 },
    AutoSimple,
    AutoSmoothing,
    AutoSelect,
}

impl ScalarModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarModelSpec::SeasonalNaive(period) if period < 1 => {
                Err(Error::Config("seasonal period must be at least 1".into()))
            }
            ScalarModelSpec::HoltLinear { alpha, beta } => {
                if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
                    Err(Error::Config(format!(
                        "smoothing parameters must lie in [0, 1], got alpha={alpha}, beta={beta}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Number of fitted parameters plus one for the error variance, the
    /// count the AICc penalty uses.
    fn param_count(&self) -> usize {
        match self {
            ScalarModelSpec::Naive | ScalarModelSpec::SeasonalNaive(_) => 1,
            ScalarModelSpec::Drift => 2,
            ScalarModelSpec::HoltLinear { .. } => 3,
            // Auto variants are resolved before scoring.
            _ => 0,
        }
    }
}

/// Naive, drift and yearly seasonal naive.
pub fn simple_candidates() -> Vec<ScalarModelSpec> {
    vec![
        ScalarModelSpec::Naive,
        ScalarModelSpec::Drift,
        ScalarModelSpec::SeasonalNaive(12),
    ]
}

/// Holt smoothing over the 9x9 grid of alpha, beta in {0.1, ..., 0.9}.
pub fn smoothing_candidates() -> Vec<ScalarModelSpec> {
    let mut out = Vec::with_capacity(81);
    for i in 1..=9 {
        for j in 1..=9 {
            out.push(ScalarModelSpec::HoltLinear {
                alpha: i as f64 * 0.1,
                beta: j as f64 * 0.1,
            });
        }
    }
    out
}

/// Union of the simple and smoothing pools.
pub fn default_candidates() -> Vec<ScalarModelSpec> {
    let mut out = simple_candidates();
    out.extend(smoothing_candidates());
    out
}

/// Holt state after running the recursion over `values`.
///
/// Level starts at the first value; trend starts at the difference of the
/// first two values, except that `beta == 0` pins the trend at zero.
fn holt_run(values: &[f64], alpha: f64, beta: f64) -> (f64, f64, Vec<f64>) {
    let mut level = values[0];
    let mut trend = if beta == 0.0 { 0.0 } else { values[1] - values[0] };
    let mut one_step = Vec::with_capacity(values.len() - 1);
    for &y in &values[1..] {
        let predicted = level + trend;
        one_step.push(predicted);
        let prev_level = level;
        level = alpha * y + (1.0 - alpha) * predicted;
        if beta != 0.0 {
            trend = beta * (level - prev_level) + (1.0 - beta) * trend;
        }
    }
    (level, trend, one_step)
}

/// One-step-ahead in-sample predictions for a concrete method, paired with
/// the index of the first predicted point. Returns `None` when the history
/// is too short for the method.
fn one_step_predictions(values: &[f64], spec: &ScalarModelSpec) -> Option<(usize, Vec<f64>)> {
    match *spec {
        ScalarModelSpec::Naive => {
            if values.len() < 2 {
                return None;
            }
            Some((1, values[..values.len() - 1].to_vec()))
        }
        ScalarModelSpec::Drift => {
            // Expanding-window drift: the prediction at t extends the line
            // through the first value and the value at t-1, so errors exist
            // from the third point on.
            if values.len() < 3 {
                return None;
            }
            let preds = (2..values.len())
                .map(|t| values[t - 1] + (values[t - 1] - values[0]) / (t - 1) as f64)
                .collect();
            Some((2, preds))
        }
        ScalarModelSpec::SeasonalNaive(period) => {
            if values.len() <= period {
                return None;
            }
            Some((period, values[..values.len() - period].to_vec()))
        }
        ScalarModelSpec::HoltLinear { alpha, beta } => {
            if values.len() < 2 {
                return None;
            }
            let (_, _, preds) = holt_run(values, alpha, beta);
            Some((1, preds))
        }
        _ => None,
    }
}

/// AICc from one-step in-sample squared errors under a Gaussian likelihood.
/// `None` when the method cannot produce enough errors for the penalty term
/// (it needs at least `k + 2` of them).
fn candidate_aicc(values: &[f64], spec: &ScalarModelSpec) -> Option<f64> {
    let (start, preds) = one_step_predictions(values, spec)?;
    let n = preds.len();
    let k = spec.param_count();
    if n < k + 2 {
        return None;
    }
    let sse: f64 = preds
        .iter()
        .zip(&values[start..])
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    let n_f = n as f64;
    let k_f = k as f64;
    Some(n_f * (sse / n_f).ln() + 2.0 * k_f + 2.0 * k_f * (k_f + 1.0) / (n_f - k_f - 1.0))
}

/// Picks the candidate with the lowest AICc. Ties go to the candidate with
/// fewer parameters, then to the earlier position in the list. Candidates
/// the history is too short for are skipped; if that removes all of them,
/// the selection fails.
pub fn auto_select(history: &ScalarHistory, candidates: &[ScalarModelSpec]) -> Result<ScalarModelSpec> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to select from".into()));
    }
    let mut best: Option<(f64, usize, usize)> = None; // (aicc, params, index)
    for (idx, cand) in candidates.iter().enumerate() {
        cand.validate()?;
        if matches!(
            cand,
            ScalarModelSpec::AutoSimple | ScalarModelSpec::AutoSmoothing | ScalarModelSpec::AutoSelect
        ) {
            return Err(Error::Config("candidates must be concrete methods".into()));
        }
        let Some(aicc) = candidate_aicc(history.values(), cand) else {
            continue;
        };
        let key = (aicc, cand.param_count(), idx);
        let better = match &best {
            None => true,
            Some(b) => (key.0 < b.0) || (key.0 == b.0 && (key.1, key.2) < (b.1, b.2)),
        };
        if better {
            best = Some(key);
        }
    }
    match best {
        Some((_, _, idx)) => Ok(candidates[idx]),
        None => Err(Error::InsufficientData(
            "history too short for every candidate".into(),
        )),
    }
}

/// Forecasts `h` steps ahead. `Auto*` specs are resolved first via
/// [`auto_select`] over their pool.
pub fn forecast_scalar(history: &ScalarHistory, spec: &ScalarModelSpec, h: usize) -> Result<Vec<f64>> {
    if h < 1 {
        return Err(Error::Config("forecast horizon must be at least 1".into()));
    }
    spec.validate()?;
    let values = history.values();
    match *spec {
        ScalarModelSpec::Naive => {
            let last = *values.last().expect("history is non-empty");
            Ok(vec![last; h])
        }
        ScalarModelSpec::Drift => {
            let first = values[0];
            let last = *values.last().expect("history is non-empty");
            let slope = (last - first) / (values.len() - 1) as f64;
            Ok((1..=h).map(|step| last + slope * step as f64).collect())
        }
        ScalarModelSpec::SeasonalNaive(period) => {
            if values.len() < period {
                return Err(Error::InsufficientData(format!(
                    "seasonal naive with period {period} needs {period} values, got {}",
                    values.len()
                )));
            }
            let tail = &values[values.len() - period..];
            Ok((0..h).map(|step| tail[step % period]).collect())
        }
        ScalarModelSpec::HoltLinear { alpha, beta } => {
            let (level, trend, _) = holt_run(values, alpha, beta);
            Ok((1..=h).map(|step| level + trend * step as f64).collect())
        }
        ScalarModelSpec::AutoSimple => {
            let chosen = auto_select(history, &simple_candidates())?;
            forecast_scalar(history, &chosen, h)
        }
        ScalarModelSpec::AutoSmoothing => {
            let chosen = auto_select(history, &smoothing_candidates())?;
            forecast_scalar(history, &chosen, h)
        }
        ScalarModelSpec::AutoSelect => {
            let chosen = auto_select(history, &default_candidates())?;
            forecast_scalar(history, &chosen, h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(values: &[f64]) -> ScalarHistory {
        ScalarHistory::new(values.to_vec()).unwrap()
    }

    #[test]
    fn drift_extends_the_line() {
        let out = forecast_scalar(&hist(&[10.0, 20.0, 30.0, 40.0]), &ScalarModelSpec::Drift, 2).unwrap();
        assert_eq!(out, vec![50.0, 60.0]);
    }

    #[test]
    fn naive_repeats_last() {
        let out = forecast_scalar(&hist(&[7.0, 7.0, 7.0]), &ScalarModelSpec::Naive, 3).unwrap();
        assert_eq!(out, vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn seasonal_naive_repeats_last_period() {
        let values: Vec<f64> = (1..=24).map(|v| v as f64).collect();
        let out = forecast_scalar(&hist(&values), &ScalarModelSpec::SeasonalNaive(12), 12).unwrap();
        assert_eq!(out, values[12..].to_vec());
        // Horizons longer than the period wrap around.
        let wrapped = forecast_scalar(&hist(&values), &ScalarModelSpec::SeasonalNaive(12), 13).unwrap();
        assert_eq!(wrapped[12], values[12]);
    }

    #[test]
    fn holt_fully_reactive_tracks_line() {
        let out = forecast_scalar(
            &hist(&[10.0, 20.0, 30.0, 40.0]),
            &ScalarModelSpec::HoltLinear { alpha: 1.0, beta: 1.0 },
            1,
        )
        .unwrap();
        assert_eq!(out, vec![50.0]);
    }

    #[test]
    fn holt_without_trend_equals_naive() {
        let spec = ScalarModelSpec::HoltLinear { alpha: 1.0, beta: 0.0 };
        for values in [
            vec![5.0, 9.0, 2.0, 14.0],
            vec![100.0, 90.0, 80.0, 70.0, 60.0],
            vec![3.0, 3.0, 4.0],
        ] {
            let h = hist(&values);
            let holt = forecast_scalar(&h, &spec, 4).unwrap();
            let naive = forecast_scalar(&h, &ScalarModelSpec::Naive, 4).unwrap();
            assert_eq!(holt, naive, "history {values:?}");
        }
    }

    #[test]
    fn auto_select_prefers_drift_on_a_line() {
        let values: Vec<f64> = (1..=6).map(|v| 10.0 * v as f64).collect();
        let chosen = auto_select(
            &hist(&values),
            &[ScalarModelSpec::Naive, ScalarModelSpec::Drift],
        )
        .unwrap();
        assert_eq!(chosen, ScalarModelSpec::Drift);
    }

    #[test]
    fn auto_select_breaks_zero_error_tie_by_param_count() {
        // Both methods have zero error on a constant history; naive has
        // fewer parameters and wins.
        let chosen = auto_select(
            &hist(&[7.0; 6]),
            &[ScalarModelSpec::Drift, ScalarModelSpec::Naive],
        )
        .unwrap();
        assert_eq!(chosen, ScalarModelSpec::Naive);
    }

    #[test]
    fn auto_select_single_candidate() {
        let chosen = auto_select(&hist(&[1.0, 5.0, 2.0, 8.0]), &[ScalarModelSpec::Naive]).unwrap();
        assert_eq!(chosen, ScalarModelSpec::Naive);
    }

    #[test]
    fn auto_select_errors_when_every_candidate_is_infeasible() {
        let err = auto_select(&hist(&[1.0, 2.0, 3.0]), &[ScalarModelSpec::SeasonalNaive(12)]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn aicc_hand_computation() {
        // Naive on [10,20,30,40]: three one-step errors of 10, SSE = 300,
        // AICc = 3 ln(100) + 2 + 4 = 19.8155...
        let got = candidate_aicc(&[10.0, 20.0, 30.0, 40.0], &ScalarModelSpec::Naive).unwrap();
        let expected = 3.0 * 100f64.ln() + 2.0 + 4.0;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        // Drift reproduces the line exactly from the third point, so its
        // score is unbounded below once the penalty is computable.
        let line: Vec<f64> = (1..=6).map(|v| 10.0 * v as f64).collect();
        let drift = candidate_aicc(&line, &ScalarModelSpec::Drift).unwrap();
        assert_eq!(drift, f64::NEG_INFINITY);
    }

    #[test]
    fn auto_spec_resolves_and_forecasts() {
        let values: Vec<f64> = (1..=20).map(|v| 3.0 * v as f64).collect();
        let h = hist(&values);
        let out = forecast_scalar(&h, &ScalarModelSpec::AutoSimple, 2).unwrap();
        // Drift wins on a line and extends it.
        assert!((out[0] - 63.0).abs() < 1e-9);
        assert!((out[1] - 66.0).abs() < 1e-9);
        assert!(forecast_scalar(&h, &ScalarModelSpec::AutoSelect, 2).is_ok());
        assert!(forecast_scalar(&h, &ScalarModelSpec::AutoSmoothing, 2).is_ok());
    }

    #[test]
    fn coding_history_validation() {
        assert!(ScalarHistory::new(vec![1.0, 2.0]).is_err());
        assert!(ScalarHistory::new(vec![1.0, -2.0, 3.0]).is_err());
        assert!(ScalarHistory::new(vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn smoothing_parameters_validated() {
        let bad = ScalarModelSpec::HoltLinear { alpha: 1.5, beta: 0.5 };
        assert!(forecast_scalar(&hist(&[1.0, 2.0, 3.0]), &bad, 1).is_err());
    }

    proptest! {
        #[test]
        fn history_preserving_methods_stay_positive(
            values in proptest::collection::vec(0.5f64..1e4, 13..40),
            h in 1usize..15,
        ) {
            let history = ScalarHistory::new(values).unwrap();
            for spec in [ScalarModelSpec::Naive, ScalarModelSpec::SeasonalNaive(12)] {
                let out = forecast_scalar(&history, &spec, h).unwrap();
                prop_assert_eq!(out.len(), h);
                prop_assert!(out.iter().all(|&v| v > 0.0));
            }
        }

        #[test]
        fn holt_no_trend_naive_property(
            values in proptest::collection::vec(0.5f64..1e3, 3..25),
            h in 1usize..10,
        ) {
            let history = ScalarHistory::new(values).unwrap();
            let holt = forecast_scalar(
                &history,
                &ScalarModelSpec::HoltLinear { alpha: 1.0, beta: 0.0 },
                h,
            ).unwrap();
            let naive = forecast_scalar(&history, &ScalarModelSpec::Naive, h).unwrap();
            prop_assert_eq!(holt, naive);
        }
    }
}
