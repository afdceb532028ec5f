//! Pattern encodings that strip level and scale from monthly windows.
//!
//! An input pattern (x-pattern) normalizes the `n` months ending at an
//! origin: subtract the window mean, divide by the window dispersion (the
//! root of the summed squared deviations). The result sums to zero and has
//! unit Euclidean norm, so windows that differ only by level or scale map
//! to the same point.
//!
//! An output pattern (y-pattern) normalizes the `m` months after the origin
//! the same way, but the mean and dispersion used for coding depend on the
//! variant:
//!
//! * `V1` codes with the output window's own statistics. They are unknown at
//!   forecast time and must be predicted separately.
//! * `V2` codes with the statistics of the input window, which are always
//!   known from history.
//!
//! Forecasting reverses the map: `value = component * dispersion + mean`.

use crate::error::{Error, Result};
use crate::series::MonthlySeries;

/// Which window supplies the coding statistics for y-patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Code with the output window's own mean and dispersion.
    V1,
    /// Code with the input window's mean and dispersion.
    V2,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::V1 => "V1",
            Variant::V2 => "V2",
        })
    }
}

/// Mean and dispersion used to encode or decode a y-pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingVars {
    mean: f64,
    dispersion: f64,
}

impl CodingVars {
    pub fn new(mean: f64, dispersion: f64) -> Result<Self> {
        if !mean.is_finite() || !dispersion.is_finite() {
            return Err(Error::Domain("coding variables must be finite".into()));
        }
        if dispersion <= 0.0 {
            return Err(Error::Domain(format!(
                "coding dispersion must be positive, got {dispersion}"
            )));
        }
        Ok(CodingVars { mean, dispersion })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }
}

/// Normalized input window. `origin` is the 0-based index of the window's
/// last month in the source values.
#[derive(Debug, Clone, PartialEq)]
pub struct XPattern {
    components: Vec<f64>,
    origin: usize,
}

impl XPattern {
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn origin(&self) -> usize {
        self.origin
    }
}

/// Normalized output window together with the coding it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct YPattern {
    components: Vec<f64>,
    coding: CodingVars,
    variant: Variant,
}

impl YPattern {
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn coding(&self) -> CodingVars {
        self.coding
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
}

/// One training example: the x-pattern at an origin and the y-pattern that
/// followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPair {
    pub x: XPattern,
    pub y: YPattern,
    pub origin: usize,
}

/// All usable training pairs of a series slice, in origin order.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pairs: Vec<PatternPair>,
    skipped: usize,
    n: usize,
    m: usize,
    variant: Variant,
}

impl PatternSet {
    pub fn pairs(&self) -> &[PatternPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Windows dropped because they were constant.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Input components as a plain matrix, one row per pair.
    pub fn x_components(&self) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|p| p.x.components.clone()).collect()
    }

    /// Output components as a plain matrix, one row per pair.
    pub fn y_components(&self) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|p| p.y.components.clone()).collect()
    }

    /// Coding means per pair, in origin order.
    pub fn coding_means(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.y.coding.mean).collect()
    }

    /// Coding dispersions per pair, in origin order.
    pub fn coding_dispersions(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.y.coding.dispersion).collect()
    }
}

/// Mean and root-sum-of-squares dispersion of a window.
pub(crate) fn window_stats(window: &[f64]) -> (f64, f64) {
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let ss: f64 = window.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss.sqrt())
}

/// Encodes the `n` values ending at `origin` (inclusive) into an x-pattern.
pub fn encode_x(values: &[f64], origin: usize, n: usize) -> Result<XPattern> {
    if n < 1 {
        return Err(Error::Config("pattern length n must be at least 1".into()));
    }
    if origin >= values.len() || origin + 1 < n {
        return Err(Error::InsufficientData(format!(
            "window of {n} ending at index {origin} does not fit in {} values",
            values.len()
        )));
    }
    let window = &values[origin + 1 - n..=origin];
    let (mean, dispersion) = window_stats(window);
    if dispersion == 0.0 {
        return Err(Error::DegenerateSequence(format!(
            "input window ending at index {origin} is constant"
        )));
    }
    let components = window.iter().map(|&v| (v - mean) / dispersion).collect();
    Ok(XPattern { components, origin })
}

/// Coding statistics at `origin` for the given variant: the input window's
/// stats for `V2`, the output window's own stats for `V1`.
pub fn coding_at(values: &[f64], origin: usize, n: usize, m: usize, variant: Variant) -> Result<CodingVars> {
    let (mean, dispersion) = match variant {
        Variant::V2 => {
            if origin >= values.len() || origin + 1 < n {
                return Err(Error::InsufficientData(format!(
                    "input window of {n} ending at index {origin} does not fit"
                )));
            }
            window_stats(&values[origin + 1 - n..=origin])
        }
        Variant::V1 => {
            if origin + m >= values.len() {
                return Err(Error::InsufficientData(format!(
                    "output window of {m} after index {origin} does not fit in {} values",
                    values.len()
                )));
            }
            window_stats(&values[origin + 1..=origin + m])
        }
    };
    if dispersion == 0.0 {
        return Err(Error::DegenerateSequence(format!(
            "coding window at index {origin} is constant"
        )));
    }
    CodingVars::new(mean, dispersion)
}

/// Encodes the `m` values after `origin` into a y-pattern.
///
/// `coding_override` supplies externally predicted coding variables for the
/// `V1` forecast path; when `None` the coding is computed from the data
/// itself (the training path). `V2` always derives coding from the input
/// window and rejects an override.
pub fn encode_y(
    values: &[f64],
    origin: usize,
    n: usize,
    m: usize,
    variant: Variant,
    coding_override: Option<CodingVars>,
) -> Result<YPattern> {
    if m < 1 {
        return Err(Error::Config("horizon m must be at least 1".into()));
    }
    if origin + m >= values.len() {
        return Err(Error::InsufficientData(format!(
            "output window of {m} after index {origin} does not fit in {} values",
            values.len()
        )));
    }
    let coding = match (variant, coding_override) {
        (Variant::V2, Some(_)) => {
            return Err(Error::Config(
                "coding override is only meaningful for variant V1".into(),
            ))
        }
        (Variant::V1, Some(c)) => c,
        (v, None) => coding_at(values, origin, n, m, v)?,
    };
    let window = &values[origin + 1..=origin + m];
    let components = window
        .iter()
        .map(|&v| (v - coding.mean) / coding.dispersion)
        .collect();
    Ok(YPattern {
        components,
        coding,
        variant,
    })
}

/// Maps y-pattern components back to the value scale.
pub fn decode_y(components: &[f64], coding: CodingVars) -> Vec<f64> {
    components
        .iter()
        .map(|&c| c * coding.dispersion + coding.mean)
        .collect()
}

/// Builds every admissible training pair from a slice of values.
///
/// Origins run from `n-1` to `len-m-1`; windows with zero dispersion are
/// skipped and counted. Fewer than two usable pairs is an error.
pub fn build_pattern_set(values: &[f64], n: usize, m: usize, variant: Variant) -> Result<PatternSet> {
    if n < 1 || m < 1 {
        return Err(Error::Config("n and m must be at least 1".into()));
    }
    if values.len() < n + m + 1 {
        return Err(Error::InsufficientData(format!(
            "{} values cannot form more than one ({n}, {m}) pattern pair",
            values.len()
        )));
    }
    let mut pairs = Vec::new();
    let mut skipped = 0usize;
    for origin in (n - 1)..=(values.len() - m - 1) {
        let x = match encode_x(values, origin, n) {
            Ok(x) => x,
            Err(Error::DegenerateSequence(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let y = match encode_y(values, origin, n, m, variant, None) {
            Ok(y) => y,
            Err(Error::DegenerateSequence(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        pairs.push(PatternPair { x, y, origin });
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} usable pattern pairs ({} skipped as degenerate)",
            pairs.len(),
            skipped
        )));
    }
    Ok(PatternSet {
        pairs,
        skipped,
        n,
        m,
        variant,
    })
}

/// Convenience wrapper over a whole series.
pub fn build_pattern_set_from_series(
    series: &MonthlySeries,
    n: usize,
    m: usize,
    variant: Variant,
) -> Result<PatternSet> {
    build_pattern_set(series.values(), n, m, variant)
}
