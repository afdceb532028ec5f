//! Monthly demand series: calendar bookkeeping, CSV ingestion, train/test
//! splits, and a seeded synthetic generator.
//!
//! The on-disk format is a UTF-8 CSV with header `id,year,month,value`, one
//! row per series-month. Months must form a contiguous run per id; values
//! are strictly positive. Everything downstream assumes both.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    /// Builds a calendar month; `month` is 1-based.
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Domain(format!("month {month} outside 1..=12")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    /// The month `offset` steps later.
    pub fn plus_months(&self, offset: usize) -> YearMonth {
        let idx = self.index() + offset as i64;
        YearMonth {
            year: idx.div_euclid(12) as i32,
            month: (idx.rem_euclid(12) + 1) as u8,
        }
    }

    /// Months since year 0, used for contiguity checks.
    fn index(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// A contiguous run of strictly positive monthly values for one id.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    id: String,
    start: YearMonth,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(id: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Domain("series id must be non-empty".into()));
        }
        if values.is_empty() {
            return Err(Error::InsufficientData(format!("series {id} has no values")));
        }
        for (t, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "series {id}, month {}: value {v} is not strictly positive",
                    start.plus_months(t)
                )));
            }
        }
        Ok(MonthlySeries { id, start, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> YearMonth {
        self.start
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

    /// Calendar month of the value at `idx`.
    pub fn month_at(&self, idx: usize) -> YearMonth {
        self.start.plus_months(idx)
    }
}

/// Where a series is cut for evaluation.
///
/// `test_origin` is the number of leading months used for training, which is
/// also the 0-based index of the first forecast month. For a holdout split
/// the `horizon` months starting there are the test window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    test_origin: usize,
    horizon: usize,
}

impl SplitSpec {
    pub fn new(test_origin: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if test_origin == 0 {
            return Err(Error::Config("test origin leaves no training data".into()));
        }
        Ok(SplitSpec { test_origin, horizon })
    }

    /// Holds out the final `horizon` months of `series`.
    pub fn holdout(series: &MonthlySeries, horizon: usize) -> Result<Self> {
        if series.len() <= horizon {
            return Err(Error::InsufficientData(format!(
                "series {} has {} months, cannot hold out {horizon}",
                series.id(),
                series.len()
            )));
        }
        SplitSpec::new(series.len() - horizon, horizon)
    }

    /// Trains on the whole series and forecasts past its end, so there are
    /// no actuals to compare against.
    pub fn beyond_end(series: &MonthlySeries, horizon: usize) -> Result<Self> {
        SplitSpec::new(series.len(), horizon)
    }

    pub fn test_origin(&self) -> usize {
        self.test_origin
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Checks the split fits the series at all.
    pub fn validate(&self, series: &MonthlySeries) -> Result<()> {
        if self.test_origin > series.len() {
            return Err(Error::Config(format!(
                "test origin {} past the end of series {} ({} months)",
                self.test_origin,
                series.id(),
                series.len()
            )));
        }
        Ok(())
    }

    /// The training prefix.
    pub fn train<'a>(&self, series: &'a MonthlySeries) -> &'a [f64] {
        &series.values()[..self.test_origin.min(series.len())]
    }

    /// The held-out window, when the series actually contains it.
    pub fn actuals<'a>(&self, series: &'a MonthlySeries) -> Option<&'a [f64]> {
        let end = self.test_origin.checked_add(self.horizon)?;
        if end <= series.len() {
            Some(&series.values()[self.test_origin..end])
        } else {
            None
        }
    }
}

const CSV_HEADER: [&str; 4] = ["id", "year", "month", "value"];

/// Reads a `id,year,month,value` file into one series per id, sorted by id.
///
/// Rows may arrive in any order; each id's months are sorted and must then
/// be contiguous. Non-positive values are rejected.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<MonthlySeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header id,year,month,value, got {}", got.join(",")),
        });
    }

    // id -> list of (calendar index, month, value, source line)
    let mut rows: BTreeMap<String, Vec<(i64, YearMonth, f64, u64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let id = record[0].trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty id".into(),
            });
        }
        let year: i32 = record[1].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad year {:?}", &record[1]),
        })?;
        let month: u8 = record[2].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad month {:?}", &record[2]),
        })?;
        let month = YearMonth::new(year, month).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let value: f64 = record[3].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad value {:?}", &record[3]),
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "series {id}, month {month}: value {value} is not strictly positive"
            )));
        }
        rows.entry(id.to_string())
            .or_default()
            .push((month.index(), month, value, line));
    }

    if rows.is_empty() {
        return Err(Error::InsufficientData("no data rows".into()));
    }

    let mut out = Vec::with_capacity(rows.len());
    for (id, mut months) in rows {
        months.sort_by_key(|&(idx, _, _, line)| (idx, line));
        for pair in months.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.0 == prev.0 {
                return Err(Error::Parse {
                    line: next.3,
                    message: format!("duplicate month {} for id {id}", next.1),
                });
            }
            if next.0 != prev.0 + 1 {
                return Err(Error::Gap {
                    id,
                    month: prev.1.plus_months(1),
                });
            }
        }
        let start = months[0].1;
        let values = months.into_iter().map(|(_, _, v, _)| v).collect();
        out.push(MonthlySeries::new(id, start, values)?);
    }
    Ok(out)
}

/// Writes series in the same format `load_csv` reads. Values are printed
/// with the shortest representation that round-trips, so load(write(x)) == x.
pub fn write_csv(series: &[MonthlySeries], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(CSV_HEADER)?;
    for s in series {
        for (t, &v) in s.values().iter().enumerate() {
            let ym = s.month_at(t);
            writer.write_record(&[
                s.id().to_string(),
                ym.year().to_string(),
                ym.month().to_string(),
                format!("{v}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Parameters for the synthetic generator.
///
/// The value at month `t` (0-based) is
/// `(base + trend*t) * (1 + seasonal_amp*sin(2*pi*(t mod 12)/12)) * (1 + e_t)`
/// with `e_t ~ N(0, noise_sd)` drawn from a generator seeded by `seed`.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub id: String,
    pub start: YearMonth,
    pub seed: u64,
    pub years: usize,
    pub base: f64,
    pub trend: f64,
    pub seasonal_amp: f64,
    pub noise_sd: f64,
}

impl SyntheticSpec {
    pub fn new(seed: u64, years: usize, base: f64, trend: f64, seasonal_amp: f64, noise_sd: f64) -> Self {
        SyntheticSpec {
            id: "synthetic".into(),
            start: YearMonth { year: 2000, month: 1 },
            seed,
            years,
            base,
            trend,
            seasonal_amp,
            noise_sd,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.years < 3 {
            return Err(Error::Config(format!("need at least 3 years, got {}", self.years)));
        }
        if !(self.base.is_finite() && self.base > 0.0) {
            return Err(Error::Config(format!("base must be positive, got {}", self.base)));
        }
        if !self.trend.is_finite() {
            return Err(Error::Config("trend must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.seasonal_amp) {
            return Err(Error::Config(format!(
                "seasonal amplitude {} outside [0, 1)",
                self.seasonal_amp
            )));
        }
        if !(0.0..0.5).contains(&self.noise_sd) {
            return Err(Error::Config(format!("noise sd {} outside [0, 0.5)", self.noise_sd)));
        }
        Ok(())
    }
}

/// Generates a deterministic synthetic series. Same spec, same bytes.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MonthlySeries> {
    spec.validate()?;
    let months = spec.years * 12;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;

    let mut values = Vec::with_capacity(months);
    for t in 0..months {
        let level = spec.base + spec.trend * t as f64;
        let phase = (t % 12) as f64 / 12.0;
        let season = 1.0 + spec.seasonal_amp * (std::f64::consts::TAU * phase).sin();
        let v = level * season * (1.0 + noise.sample(&mut rng));
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Domain(format!(
                "synthetic parameters produced non-positive value {v} at month {t}"
            )));
        }
        values.push(v);
    }
    MonthlySeries::new(spec.id.clone(), spec.start, values)
}
